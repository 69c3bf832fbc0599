#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "motifdash/data.hpp"
#include "motifdash/interpret.hpp"
#include "motifdash/matrix.hpp"
#include "motifdash/pwm.hpp"

namespace motifdash::motif {

struct MotifError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kMotifWidth = 9;

struct ExtractedMotif {
  std::string subsequence;
  int start = 0;        // 0-based window start
  bool fallback = false;  // temporal extractor only: no negative-to-positive crossing
};

// Window with the highest sum of saliency magnitudes; leftmost wins ties.
ExtractedMotif extract_saliency_motif(const interpret::SaliencyMap& sal,
                                      const data::DnaSequence& seq,
                                      int width = kMotifWidth);

// Window ending where the forward score most strongly crosses from below
// 0.5 to at least 0.5 over `width` steps; falls back (flagged) to the
// largest increase when no crossing exists.
ExtractedMotif extract_temporal_motif(const interpret::TemporalScores& ts,
                                      const data::DnaSequence& seq,
                                      int width = kMotifWidth);

Pwm build_pwm(const std::vector<std::string>& subsequences, double pseudocount,
              const std::string& name = "motif");

Pwm reverse_complement(const Pwm& p);

enum class Orientation { kForward, kReverseComplement };

struct MotifMatch {
  std::string query;
  std::string target;
  int best_offset = 0;
  Orientation orientation = Orientation::kForward;
  double similarity = 0.0;
  double p_value = 1.0;
  bool is_match = false;
};

// Offset/orientation sweep of mean per-column Pearson correlation
// (>= 4 overlapping columns), with a column-shuffled permutation null.
MotifMatch compare_motifs(const Pwm& query, const Pwm& target, int null_samples,
                          double threshold, Rng& rng);

// Similarity statistic alone (used both by compare_motifs and its null).
struct Alignment {
  double similarity = 0.0;
  int offset = 0;
  Orientation orientation = Orientation::kForward;
};
Alignment best_alignment(const Pwm& query, const Pwm& target);

void write_meme_minimal(const std::vector<Pwm>& pwms, const std::string& path);
std::vector<Pwm> read_meme_minimal(const std::string& path);

std::string match_json_line(const MotifMatch& m);

}  // namespace motifdash::motif
