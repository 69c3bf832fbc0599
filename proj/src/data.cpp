#include "motifdash/data.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace motifdash::data {

int base_index(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default:
      throw DataError(std::string("invalid nucleotide '") + c + "'");
  }
}

DnaSequence DnaSequence::from_string(const std::string& s) {
  if (s.empty()) throw DataError("empty sequence");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != 'A' && c != 'C' && c != 'G' && c != 'T')
      throw DataError("invalid nucleotide '" + std::string(1, c) + "' at position " +
                      std::to_string(i + 1));
  }
  return DnaSequence{s};
}

Matrix one_hot_encode(const DnaSequence& seq) {
  Matrix m = Matrix::Zero(seq.length(), 4);
  for (int t = 0; t < seq.length(); ++t) m(t, base_index(seq.chars[t])) = 1.0;
  return m;
}

DnaSequence one_hot_decode(const Matrix& m) {
  if (m.cols() != 4) throw DataError("one_hot_decode: expected 4 columns");
  std::string s(m.rows(), '?');
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    int active = -1;
    for (int c = 0; c < 4; ++c) {
      if (m(t, c) == 1.0) {
        if (active >= 0) throw DataError("one_hot_decode: multiple 1s in row " +
                                         std::to_string(t + 1));
        active = c;
      } else if (m(t, c) != 0.0) {
        throw DataError("one_hot_decode: non-binary entry in row " + std::to_string(t + 1));
      }
    }
    if (active < 0) throw DataError("one_hot_decode: no 1 in row " + std::to_string(t + 1));
    s[static_cast<std::size_t>(t)] = kAlphabet[active];
  }
  return DnaSequence{s};
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  LabeledDataset ds;
  std::unordered_set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, seq, label;
    if (!std::getline(ss, id, '\t') || !std::getline(ss, seq, '\t') ||
        !std::getline(ss, label, '\t'))
      throw DataError("line " + std::to_string(lineno) + ": expected id<TAB>sequence<TAB>label");
    if (!seen.insert(id).second)
      throw DataError("line " + std::to_string(lineno) + ": duplicate id '" + id + "'");
    Record rec;
    rec.id = id;
    try {
      rec.sequence = DnaSequence::from_string(seq);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (label == "+1")
      rec.label = 1;
    else if (label == "-1")
      rec.label = -1;
    else
      throw DataError("line " + std::to_string(lineno) + ": bad label '" + label +
                      "' (expected +1 or -1)");
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_dataset(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (const Record& r : ds.records)
    out << r.id << '\t' << r.sequence.chars << '\t' << (r.label > 0 ? "+1" : "-1") << '\n';
}

DnaSequence dinucleotide_shuffle(const DnaSequence& seq, Rng& rng) {
  const std::string& s = seq.chars;
  const int T = seq.length();
  if (T < 2) throw DataError("dinucleotide_shuffle: need length >= 2");

  // Successor multilists of the transition multigraph.
  std::array<std::vector<int>, 4> edges;
  for (int i = 0; i + 1 < T; ++i) edges[base_index(s[i])].push_back(base_index(s[i + 1]));
  const int first = base_index(s.front());
  const int last = base_index(s.back());

  // Pick a random last outgoing edge per non-sink vertex such that
  // following the picks from every vertex reaches the sink.
  std::array<int, 4> last_edge{-1, -1, -1, -1};
  auto picks_connect = [&]() {
    for (int v = 0; v < 4; ++v) {
      if (edges[v].empty() || v == last) continue;
      int cur = v;
      std::array<bool, 4> visited{};
      while (cur != last) {
        if (visited[cur] || last_edge[cur] < 0) return false;
        visited[cur] = true;
        cur = last_edge[cur];
      }
    }
    return true;
  };
  bool connected = false;
  for (int attempt = 0; attempt < 100000 && !connected; ++attempt) {
    for (int v = 0; v < 4; ++v) {
      last_edge[v] = -1;
      if (!edges[v].empty() && v != last) {
        std::uniform_int_distribution<std::size_t> pick(0, edges[v].size() - 1);
        last_edge[v] = edges[v][pick(rng)];
      }
    }
    connected = picks_connect();
  }
  if (!connected) return seq;  // degenerate graphs fall back to the input order

  // Shuffle each vertex's edges, forcing the chosen edge last.
  std::array<std::vector<int>, 4> ordered;
  for (int v = 0; v < 4; ++v) {
    std::vector<int> pool = edges[v];
    if (last_edge[v] >= 0) {
      auto it = std::find(pool.begin(), pool.end(), last_edge[v]);
      pool.erase(it);
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    if (last_edge[v] >= 0) pool.push_back(last_edge[v]);
    ordered[v] = std::move(pool);
  }

  std::string out;
  out.reserve(static_cast<std::size_t>(T));
  out.push_back(kAlphabet[first]);
  std::array<std::size_t, 4> next{0, 0, 0, 0};
  int cur = first;
  for (int i = 0; i + 1 < T; ++i) {
    cur = ordered[cur][next[cur]++];
    out.push_back(kAlphabet[cur]);
  }
  return DnaSequence{out};
}

namespace {

Pwm pwm_from_json(const nlohmann::json& j) {
  Pwm p;
  p.name = j.value("name", "planted");
  const auto& cols = j.at("columns");
  p.probs = Matrix::Zero(static_cast<Eigen::Index>(cols.size()), 4);
  for (std::size_t r = 0; r < cols.size(); ++r) {
    if (cols[r].size() != 4)
      throw DataError("planted-pwm column " + std::to_string(r + 1) + " must have 4 entries");
    for (int c = 0; c < 4; ++c) p.probs(static_cast<Eigen::Index>(r), c) = cols[r][c].get<double>();
  }
  return p;
}

DnaSequence sample_background(int length, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::string s(static_cast<std::size_t>(length), 'A');
  for (char& c : s) c = kAlphabet[pick(rng)];
  return DnaSequence{s};
}

std::string sample_motif(const Pwm& pwm, Rng& rng) {
  std::string s;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < pwm.width(); ++r) {
    double x = u(rng);
    int c = 0;
    for (; c < 3; ++c) {
      x -= pwm.probs(r, c);
      if (x < 0) break;
    }
    s.push_back(kAlphabet[c]);
  }
  return s;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad synthetic spec JSON: ") + e.what());
  }
  SyntheticSpec spec;
  try {
    spec.sequence_length = j.value("sequence-length", 101);
    spec.train_count = j.at("train-count").get<int>();
    spec.test_count = j.at("test-count").get<int>();
    spec.planted_pwm = pwm_from_json(j.at("planted-pwm"));
    const std::string place = j.value("planting-position-distribution", "uniform");
    if (place == "center-fixed")
      spec.placement = Placement::kCenterFixed;
    else if (place == "uniform")
      spec.placement = Placement::kUniform;
    else
      throw DataError("unknown planting-position-distribution: " + place);
    spec.seed = j.value("seed", 0ull);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad synthetic spec: ") + e.what());
  }
  if (spec.planted_pwm.width() > spec.sequence_length)
    throw DataError("planted PWM wider than sequence length");
  if (spec.train_count % 2 != 0 || spec.test_count % 2 != 0)
    throw DataError("train-count and test-count must be even for an even class split");
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open synthetic spec: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synthetic_spec(ss.str());
}

std::pair<LabeledDataset, LabeledDataset> generate_synthetic(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  const int w = spec.planted_pwm.width();
  auto make_split = [&](int count, const std::string& tag) {
    LabeledDataset ds;
    ds.split_tag = tag;
    const int pairs = count / 2;
    for (int i = 0; i < pairs; ++i) {
      DnaSequence pos = sample_background(spec.sequence_length, rng);
      const std::string motif = sample_motif(spec.planted_pwm, rng);
      int start;
      if (spec.placement == Placement::kCenterFixed) {
        start = (spec.sequence_length - w) / 2;
      } else {
        std::uniform_int_distribution<int> pick(0, spec.sequence_length - w);
        start = pick(rng);
      }
      pos.chars.replace(static_cast<std::size_t>(start), static_cast<std::size_t>(w), motif);
      DnaSequence neg = dinucleotide_shuffle(pos, rng);
      char idx[16];
      std::snprintf(idx, sizeof idx, "%05d", i);
      ds.records.push_back({tag + "_pos_" + idx, pos, +1});
      ds.records.push_back({tag + "_neg_" + idx, neg, -1});
    }
    return ds;
  };
  return {make_split(spec.train_count, "train"), make_split(spec.test_count, "test")};
}

}  // namespace motifdash::data
