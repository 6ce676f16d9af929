#ifndef PHYLOCP_CHAIN_IO_HPP
#define PHYLOCP_CHAIN_IO_HPP

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "phylocp/pmmh.hpp"

namespace phylocp {

class ChainParseError : public std::runtime_error {
 public:
  ChainParseError(const std::string& what, int line);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Chain plus the key=value pairs of its leading comment line.
struct ChainFile {
  std::map<std::string, std::string> meta;
  std::vector<ChainRecord> records;
};

/// CSV with columns iteration,k,s,theta,log_evidence,accepted,proposal_k,
/// cumulative_seconds. Vector fields are ';'-joined. `meta` is written as a
/// leading "# key=value ..." line.
void write_chain_csv(std::ostream& out, const std::vector<ChainRecord>& chain,
                     const std::map<std::string, std::string>& meta = {});
ChainFile read_chain_csv(std::istream& in);

} // namespace phylocp

#endif
