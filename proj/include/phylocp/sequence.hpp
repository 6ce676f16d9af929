#ifndef PHYLOCP_SEQUENCE_HPP
#define PHYLOCP_SEQUENCE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phylocp/tree.hpp"

namespace phylocp {

using StateMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Aligned nucleotide sequences: row i is the sequence of leaf i+1, column j
/// is site j+1. Entries are states 0..3.
struct SequenceData {
  StateMatrix states;
  std::vector<std::string> names;

  int sequence_count() const { return static_cast<int>(states.rows()); }
  int site_count() const { return static_cast<int>(states.cols()); }
  std::uint8_t at(int leaf, int site) const { return states(leaf - 1, site - 1); }
};

int encode_base(char c);
char decode_base(int state);

struct FastaRecord {
  std::string name;
  std::string sequence;
};

/// Relaxed FASTA: '>' headers, bases on any number of lines, blank lines and
/// ';' comment lines ignored.
std::vector<FastaRecord> read_fasta(std::istream& in);
void write_fasta(std::ostream& out, const SequenceData& data, int line_width = 60, const std::string& comment = {});

/// Builds leaf-ordered data from FASTA records. By default record r maps to
/// leaf r+1; with `by_name` records are matched to tree leaf labels.
SequenceData sequences_for_tree(const std::vector<FastaRecord>& records, const Tree& tree, bool by_name = false);

} // namespace phylocp

#endif
