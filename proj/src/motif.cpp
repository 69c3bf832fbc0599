#include "motifdash/motif.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace motifdash::motif {

ExtractedMotif extract_saliency_motif(const interpret::SaliencyMap& sal,
                                      const data::DnaSequence& seq, int width) {
  const int T = seq.length();
  if (static_cast<int>(sal.magnitudes.size()) != T)
    throw MotifError("saliency map length does not match sequence");
  if (T < width)
    throw MotifError("sequence length " + std::to_string(T) +
                     " shorter than motif width " + std::to_string(width));
  int best_start = 0;
  double best_sum = -1.0;
  for (int s = 0; s + width <= T; ++s) {
    double sum = 0.0;
    for (int i = 0; i < width; ++i) sum += sal.magnitudes[static_cast<std::size_t>(s + i)];
    if (sum > best_sum) {
      best_sum = sum;
      best_start = s;
    }
  }
  return {seq.chars.substr(static_cast<std::size_t>(best_start), static_cast<std::size_t>(width)),
          best_start, false};
}

ExtractedMotif extract_temporal_motif(const interpret::TemporalScores& ts,
                                      const data::DnaSequence& seq, int width) {
  const int T = seq.length();
  if (static_cast<int>(ts.forward.size()) != T)
    throw MotifError("temporal scores length does not match sequence");
  if (T < width)
    throw MotifError("sequence length " + std::to_string(T) +
                     " shorter than motif width " + std::to_string(width));

  // 1-based window ends t in [width+1, T]: change = forward[t] - forward[t-width]
  int best_end = -1;
  double best_change = -std::numeric_limits<double>::infinity();
  bool crossing_found = false;
  for (int t = width + 1; t <= T; ++t) {
    const double lo = ts.forward[static_cast<std::size_t>(t - width - 1)];
    const double hi = ts.forward[static_cast<std::size_t>(t - 1)];
    const bool crossing = lo < 0.5 && hi >= 0.5;
    const double change = hi - lo;
    if (crossing && !crossing_found) {
      crossing_found = true;
      best_end = t;
      best_change = change;
    } else if (crossing == crossing_found && change > best_change) {
      best_end = t;
      best_change = change;
    }
  }
  if (best_end < 0) {  // T == width: single window, trivially a fallback
    return {seq.chars.substr(0, static_cast<std::size_t>(width)), 0, true};
  }
  const int start = best_end - width;  // 0-based
  return {seq.chars.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(width)),
          start, !crossing_found};
}

Pwm build_pwm(const std::vector<std::string>& subsequences, double pseudocount,
              const std::string& name) {
  if (subsequences.empty()) throw MotifError("build_pwm: need at least one subsequence");
  const std::size_t w = subsequences.front().size();
  for (const auto& s : subsequences)
    if (s.size() != w) throw MotifError("build_pwm: subsequence length mismatch");

  Pwm p;
  p.name = name;
  p.pseudocount = pseudocount;
  p.probs = Matrix::Zero(static_cast<Eigen::Index>(w), 4);
  for (const auto& s : subsequences)
    for (std::size_t i = 0; i < w; ++i)
      p.probs(static_cast<Eigen::Index>(i), data::base_index(s[i])) += 1.0;
  const double n = static_cast<double>(subsequences.size());
  p.probs = (p.probs.array() + pseudocount) / (n + 4.0 * pseudocount);
  return p;
}

Pwm reverse_complement(const Pwm& p) {
  Pwm rc;
  rc.name = p.name + "_rc";
  rc.pseudocount = p.pseudocount;
  rc.probs = Matrix::Zero(p.probs.rows(), 4);
  for (Eigen::Index r = 0; r < p.probs.rows(); ++r) {
    const Eigen::Index src = p.probs.rows() - 1 - r;
    rc.probs(r, 0) = p.probs(src, 3);  // A <- T
    rc.probs(r, 1) = p.probs(src, 2);  // C <- G
    rc.probs(r, 2) = p.probs(src, 1);  // G <- C
    rc.probs(r, 3) = p.probs(src, 0);  // T <- A
  }
  return rc;
}

namespace {

constexpr int kMinOverlap = 4;

// Pearson correlation of two probability 4-vectors; 0 if either is constant.
double column_corr(const Eigen::RowVector4d& a, const Eigen::RowVector4d& b) {
  const double ma = a.mean(), mb = b.mean();
  const Eigen::RowVector4d da = a.array() - ma;
  const Eigen::RowVector4d db = b.array() - mb;
  const double va = da.squaredNorm(), vb = db.squaredNorm();
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return da.dot(db) / std::sqrt(va * vb);
}

double aligned_similarity(const Matrix& q, const Matrix& t, int offset) {
  // query column i aligns with target column i + offset
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < q.rows(); ++i) {
    const int j = i + offset;
    if (j < 0 || j >= t.rows()) continue;
    sum += column_corr(q.row(i), t.row(j));
    ++n;
  }
  return n >= kMinOverlap ? sum / n : -std::numeric_limits<double>::infinity();
}

Alignment best_alignment_of(const Matrix& q, const Matrix& t_fwd, const Matrix& t_rc) {
  Alignment best;
  best.similarity = -std::numeric_limits<double>::infinity();
  const int qw = static_cast<int>(q.rows());
  const int tw = static_cast<int>(t_fwd.rows());
  for (int orient = 0; orient < 2; ++orient) {
    const Matrix& t = orient == 0 ? t_fwd : t_rc;
    for (int offset = -(qw - kMinOverlap); offset <= tw - kMinOverlap; ++offset) {
      const double sim = aligned_similarity(q, t, offset);
      if (sim > best.similarity) {
        best.similarity = sim;
        best.offset = offset;
        best.orientation = orient == 0 ? Orientation::kForward : Orientation::kReverseComplement;
      }
    }
  }
  return best;
}

}  // namespace

Alignment best_alignment(const Pwm& query, const Pwm& target) {
  if (query.width() < kMinOverlap || target.width() < kMinOverlap)
    throw MotifError("compare_motifs: overlap impossible, both widths must be >= 4");
  return best_alignment_of(query.probs, target.probs, reverse_complement(target).probs);
}

MotifMatch compare_motifs(const Pwm& query, const Pwm& target, int null_samples,
                          double threshold, Rng& rng) {
  if (null_samples < 1) throw MotifError("compare_motifs: need at least one null sample");
  const Alignment obs = best_alignment(query, target);

  int at_least = 0;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(target.width()));
  std::iota(perm.begin(), perm.end(), 0);
  Matrix shuffled = target.probs;
  for (int s = 0; s < null_samples; ++s) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index r = 0; r < shuffled.rows(); ++r)
      shuffled.row(r) = target.probs.row(perm[static_cast<std::size_t>(r)]);
    Pwm null_target{shuffled, "null", target.pseudocount};
    const Alignment null_best =
        best_alignment_of(query.probs, shuffled, reverse_complement(null_target).probs);
    if (null_best.similarity >= obs.similarity) ++at_least;
  }

  MotifMatch m;
  m.query = query.name;
  m.target = target.name;
  m.best_offset = obs.offset;
  m.orientation = obs.orientation;
  m.similarity = std::isfinite(obs.similarity) ? obs.similarity : 0.0;
  m.p_value = (1.0 + at_least) / (null_samples + 1.0);  // add-one smoothing
  m.is_match = m.p_value <= threshold;
  return m;
}

void write_meme_minimal(const std::vector<Pwm>& pwms, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MotifError("cannot write MEME file: " + path);
  out << "MEME version 4\n\nALPHABET= ACGT\n\n";
  char buf[64];
  for (const Pwm& p : pwms) {
    out << "MOTIF " << p.name << "\n";
    out << "letter-probability matrix: alength= 4 w= " << p.width() << "\n";
    for (Eigen::Index r = 0; r < p.probs.rows(); ++r) {
      std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f\n", p.probs(r, 0), p.probs(r, 1),
                    p.probs(r, 2), p.probs(r, 3));
      out << buf;
    }
    out << "\n";
  }
}

std::vector<Pwm> read_meme_minimal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MotifError("cannot open MEME file: " + path);
  std::vector<Pwm> pwms;
  std::string line;
  int lineno = 0;
  bool saw_version = false, saw_alphabet = false;
  auto parse_error = [&](const std::string& msg) {
    return MotifError("MEME parse error at line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "MEME") {
      saw_version = true;
    } else if (word == "ALPHABET=") {
      std::string alpha;
      ss >> alpha;
      if (alpha != "ACGT") throw parse_error("expected ALPHABET= ACGT");
      saw_alphabet = true;
    } else if (word == "MOTIF") {
      if (!saw_version || !saw_alphabet)
        throw parse_error("MOTIF before version/alphabet header");
      Pwm p;
      if (!(ss >> p.name)) throw parse_error("MOTIF line missing name");
      // header line: letter-probability matrix: alength= 4 w= <width>
      int width = -1;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream hs(line);
        std::string tok;
        while (hs >> tok) {
          if (tok == "w=") {
            if (!(hs >> width)) throw parse_error("bad w= value");
          }
        }
        if (line.find("letter-probability") == std::string::npos)
          throw parse_error("expected letter-probability matrix header");
        break;
      }
      if (width < 1) throw parse_error("missing or invalid w= width");
      p.probs = Matrix::Zero(width, 4);
      for (int r = 0; r < width; ++r) {
        if (!std::getline(in, line)) throw parse_error("truncated matrix");
        ++lineno;
        std::istringstream rs(line);
        for (int c = 0; c < 4; ++c)
          if (!(rs >> p.probs(r, c))) throw parse_error("expected 4 probabilities");
      }
      pwms.push_back(std::move(p));
    }
  }
  if (!saw_alphabet) throw MotifError("MEME parse error: missing ALPHABET= ACGT line");
  return pwms;
}

std::string match_json_line(const MotifMatch& m) {
  nlohmann::json j{{"query", m.query},
                   {"target", m.target},
                   {"offset", m.best_offset},
                   {"orientation",
                    m.orientation == Orientation::kForward ? "forward" : "reverse-complement"},
                   {"similarity", m.similarity},
                   {"p", m.p_value},
                   {"match", m.is_match}};
  return j.dump();
}

}  // namespace motifdash::motif
