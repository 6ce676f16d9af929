#include "phylocp/sequence.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace phylocp {

int encode_base(char c)
{
  switch (std::toupper(static_cast<unsigned char>(c))) {
  case 'A': return 0;
  case 'C': return 1;
  case 'G': return 2;
  case 'T': return 3;
  default: return -1;
  }
}

char decode_base(int state)
{
  static constexpr char kBases[] = "ACGT";
  if (state < 0 || state > 3)
    throw std::out_of_range("state out of range");
  return kBases[state];
}

std::vector<FastaRecord> read_fasta(std::istream& in)
{
  std::vector<FastaRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == ';')
      continue;
    if (line.front() == '>') {
      std::string name = line.substr(1);
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
        name.pop_back();
      records.push_back({name, {}});
      continue;
    }
    if (records.empty())
      throw std::runtime_error("FASTA line " + std::to_string(line_no) + ": sequence data before first header");
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c)))
        continue;
      if (encode_base(c) < 0)
        throw std::runtime_error("FASTA line " + std::to_string(line_no) + ": invalid base '" + std::string(1, c) + "'");
      records.back().sequence += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return records;
}

void write_fasta(std::ostream& out, const SequenceData& data, int line_width, const std::string& comment)
{
  if (line_width < 1)
    throw std::invalid_argument("FASTA line width must be positive");
  if (!comment.empty())
    out << ';' << comment << '\n';
  for (int i = 0; i < data.sequence_count(); ++i) {
    out << '>' << (i < static_cast<int>(data.names.size()) ? data.names[i] : "seq" + std::to_string(i + 1)) << '\n';
    for (int j = 0; j < data.site_count(); ++j) {
      out << decode_base(data.states(i, j));
      if ((j + 1) % line_width == 0 && j + 1 != data.site_count())
        out << '\n';
    }
    out << '\n';
  }
}

SequenceData sequences_for_tree(const std::vector<FastaRecord>& records, const Tree& tree, bool by_name)
{
  const int n = tree.leaf_count();
  if (static_cast<int>(records.size()) != n)
    throw std::runtime_error("expected " + std::to_string(n) + " sequences, found " + std::to_string(records.size()));
  const auto m = records.front().sequence.size();
  for (const auto& r : records)
    if (r.sequence.size() != m)
      throw std::runtime_error("sequence '" + r.name + "' has a different length");

  std::vector<const FastaRecord*> row(n, nullptr);
  if (by_name) {
    std::unordered_map<std::string, const FastaRecord*> index;
    for (const auto& r : records)
      index[r.name] = &r;
    for (int i = 0; i < n; ++i) {
      auto it = index.find(tree.leaf_name(i + 1));
      if (it == index.end())
        throw std::runtime_error("no sequence named '" + tree.leaf_name(i + 1) + "'");
      row[i] = it->second;
    }
  } else {
    for (int i = 0; i < n; ++i)
      row[i] = &records[i];
  }

  SequenceData data;
  data.states.resize(n, static_cast<Eigen::Index>(m));
  for (int i = 0; i < n; ++i) {
    data.names.push_back(tree.leaf_name(i + 1));
    for (std::size_t j = 0; j < m; ++j)
      data.states(i, static_cast<Eigen::Index>(j)) = static_cast<std::uint8_t>(encode_base(row[i]->sequence[j]));
  }
  return data;
}

} // namespace phylocp
