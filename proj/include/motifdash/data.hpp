#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "motifdash/matrix.hpp"
#include "motifdash/pwm.hpp"

namespace motifdash::data {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict ACGT alphabet; ambiguity codes are rejected.
struct DnaSequence {
  std::string chars;

  // Throws DataError naming the 1-based offending position.
  static DnaSequence from_string(const std::string& s);
  int length() const { return static_cast<int>(chars.size()); }
  friend bool operator==(const DnaSequence& a, const DnaSequence& b) = default;
};

int base_index(char c);  // A=0 C=1 G=2 T=3, DataError otherwise

// T x 4 one-hot matrix, column order A,C,G,T.
Matrix one_hot_encode(const DnaSequence& seq);
DnaSequence one_hot_decode(const Matrix& m);

struct Record {
  std::string id;
  DnaSequence sequence;
  int label = 0;  // +1 or -1
};

struct LabeledDataset {
  std::vector<Record> records;
  std::string split_tag;  // "train" or "test"
};

// TSV format: id<TAB>sequence<TAB>label per line, label in {+1,-1}.
LabeledDataset load_dataset(const std::string& path);
void write_dataset(const LabeledDataset& ds, const std::string& path);

// Random Eulerian-path traversal of the dinucleotide transition
// multigraph: exact dinucleotide counts and both endpoints preserved.
DnaSequence dinucleotide_shuffle(const DnaSequence& seq, Rng& rng);

enum class Placement { kCenterFixed, kUniform };

struct SyntheticSpec {
  int sequence_length = 101;
  int train_count = 0;
  int test_count = 0;
  Pwm planted_pwm;
  Placement placement = Placement::kUniform;
  std::uint64_t seed = 0;
};

SyntheticSpec parse_synthetic_spec(const std::string& json_text);
SyntheticSpec load_synthetic_spec(const std::string& path);

// Positives: uniform background with one PWM sample planted; negatives:
// dinucleotide shuffle of each positive. Even class split.
std::pair<LabeledDataset, LabeledDataset> generate_synthetic(const SyntheticSpec& spec);

}  // namespace motifdash::data
