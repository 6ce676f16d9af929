#include "phylocp/chain_io.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace phylocp {

namespace {

constexpr const char* kHeader = "iteration,k,s,theta,log_evidence,accepted,proposal_k,cumulative_seconds";

std::string format_double(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep)
{
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep))
    parts.push_back(cur);
  if (!text.empty() && text.back() == sep)
    parts.emplace_back();
  return parts;
}

template <typename T>
T parse_number(const std::string& field, const char* what, int line)
{
  T value{};
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ChainParseError(std::string("malformed ") + what + " '" + field + "'", line);
  return value;
}

double parse_double(const std::string& field, const char* what, int line)
{
  // from_chars does not accept "inf" spellings produced by printf
  if (field == "inf")
    return std::numeric_limits<double>::infinity();
  if (field == "-inf")
    return -std::numeric_limits<double>::infinity();
  if (field == "nan" || field == "-nan")
    return std::numeric_limits<double>::quiet_NaN();
  return parse_number<double>(field, what, line);
}

} // namespace

ChainParseError::ChainParseError(const std::string& what, int line)
    : std::runtime_error("chain line " + std::to_string(line) + ": " + what), line_(line)
{
}

void write_chain_csv(std::ostream& out, const std::vector<ChainRecord>& chain,
                     const std::map<std::string, std::string>& meta)
{
  if (!meta.empty()) {
    out << '#';
    for (const auto& [k, v] : meta)
      out << ' ' << k << '=' << v;
    out << '\n';
  }
  out << kHeader << '\n';
  for (const auto& r : chain) {
    out << r.iteration << ',' << r.state.k() << ',';
    for (int j = 0; j < r.state.k(); ++j)
      out << (j ? ";" : "") << r.state.s[j];
    out << ',';
    for (Eigen::Index j = 0; j < r.state.theta.size(); ++j)
      out << (j ? ";" : "") << format_double(r.state.theta[j]);
    out << ',' << format_double(r.log_evidence) << ',' << (r.accepted ? 1 : 0) << ',' << r.proposal_k << ','
        << format_double(r.wall_time) << '\n';
  }
}

ChainFile read_chain_csv(std::istream& in)
{
  ChainFile file;
  std::string text;
  int line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r')
      text.pop_back();
    if (text.empty())
      continue;
    if (text[0] == '#') {
      std::istringstream words(text.substr(1));
      std::string word;
      while (words >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos)
          throw ChainParseError("metadata entry without '='", line);
        file.meta[word.substr(0, eq)] = word.substr(eq + 1);
      }
      continue;
    }
    if (!header_seen) {
      if (text != kHeader)
        throw ChainParseError("unexpected header", line);
      header_seen = true;
      continue;
    }
    const auto f = split(text, ',');
    if (f.size() != 8)
      throw ChainParseError("expected 8 fields, found " + std::to_string(f.size()), line);
    ChainRecord r;
    r.iteration = parse_number<int>(f[0], "iteration", line);
    const int k = parse_number<int>(f[1], "k", line);
    if (k < 0)
      throw ChainParseError("negative k", line);
    if (k > 0)
      for (const auto& s : split(f[2], ';'))
        r.state.s.push_back(parse_number<int>(s, "change-point", line));
    if (r.state.k() != k)
      throw ChainParseError("change-point count does not match k", line);
    const auto rates = split(f[3], ';');
    if (static_cast<int>(rates.size()) != k + 1)
      throw ChainParseError("rate count does not match k", line);
    r.state.theta.resize(k + 1);
    for (int j = 0; j <= k; ++j)
      r.state.theta[j] = parse_double(rates[j], "rate", line);
    r.log_evidence = parse_double(f[4], "log evidence", line);
    const int acc = parse_number<int>(f[5], "accepted flag", line);
    if (acc != 0 && acc != 1)
      throw ChainParseError("accepted flag must be 0 or 1", line);
    r.accepted = acc == 1;
    r.proposal_k = parse_number<int>(f[6], "proposal k", line);
    r.wall_time = parse_double(f[7], "seconds", line);
    file.records.push_back(std::move(r));
  }
  if (!header_seen)
    throw ChainParseError("missing header", line);
  return file;
}

} // namespace phylocp
