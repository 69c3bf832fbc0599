#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "motifdash/pwm.hpp"

namespace motifdash::dashboard {

struct DashboardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Annotation {
  std::string name;
  int start = 0;  // 0-based
  int width = 0;
};

struct ModelViz {
  std::string model_name;
  double score = 0.0;                     // prob-positive on the sequence
  std::vector<double> saliency;           // length T magnitudes
  bool has_temporal = false;
  std::vector<double> temporal_forward;   // length T, in [0,1]
  std::vector<double> temporal_backward;  // length T, in [0,1]
  std::optional<Pwm> class_opt_logo;      // display-form columns
};

struct DashboardSpec {
  std::string title;
  std::string sequence_id;
  std::string sequence;  // ACGT characters
  std::vector<ModelViz> models;
  std::vector<Annotation> annotations;
};

// One letter stack per column, heights proportional to information
// content (2 + sum p log2 p bits), tallest letter on top.
std::string render_logo(const Pwm& p);

// Self-contained, well-formed HTML with inline SVG. Sections top to
// bottom: class optimization, saliency maps (with model scores),
// temporal output scores. Deterministic output for a fixed spec.
void render_dashboard(const DashboardSpec& spec, const std::string& path);
std::string render_dashboard_html(const DashboardSpec& spec);

}  // namespace motifdash::dashboard
