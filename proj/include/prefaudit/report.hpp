#pragma once

// JSON serialization of every result type, declarative configs, and the
// coefficient plot (SVG plus its data as CSV).

#include <json.hpp>

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prefaudit/fe_glm.hpp"
#include "prefaudit/panel.hpp"
#include "prefaudit/robustness.hpp"
#include "prefaudit/sp_tests.hpp"
#include "prefaudit/synthetic.hpp"
#include "prefaudit/visibility.hpp"

namespace prefaudit::report {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";
inline constexpr const char* kToolVersion = "0.1.0";

json to_json(const fe::FitResult& fit);
json to_json(const fe::ModelSpec& spec);
json to_json(const sp::TestReport& report, bool include_fit = true);
json to_json(const sp::JointVerdict& verdict);
json to_json(const robust::VariantReport& variant);
json to_json(const synth::SimulationConfig& config);
json to_json(const synth::GroundTruth& truth);
json to_json(const synth::MonteCarloCell& cell);
json to_json(const panel::SampleFilter& filter);

// Keys absent from `j` keep the value in `base`; unknown keys are an error.
fe::ModelSpec model_spec_from_json(const json& j, fe::ModelSpec base);
synth::SimulationConfig simulation_config_from_json(const json& j,
                                                    synth::SimulationConfig base = {});
panel::SampleFilter sample_filter_from_json(const json& j);

// Enough of a report to compare or plot it again.
sp::TestReport test_report_from_json(const json& j);

struct InputDigest {
  std::string name;
  std::string sha256;
};

// Top-level document: schema and tool version, the producing command, its
// configuration, digests of every input, then `body` under "result".
json envelope(const std::string& command, const json& config,
              const std::vector<InputDigest>& inputs, json body);

std::string summary_text(const sp::TestReport& report);
std::string summary_text(const sp::JointVerdict& verdict);

std::string monte_carlo_csv(const std::vector<synth::MonteCarloCell>& cells);

struct PlotPoint {
  std::string label;
  double estimate = 0.0;  // percent
  double ci_low = 0.0;
  double ci_high = 0.0;
};

PlotPoint plot_point(const sp::TestReport& report, std::string label = {});

// One point with whiskers per sample, samples along the horizontal axis and
// a dashed zero line.
std::string render_coefficient_svg(std::span<const PlotPoint> points, const std::string& title,
                                   const std::string& y_label = "Estimate (%)");
std::string plot_data_csv(std::span<const PlotPoint> points);

}  // namespace prefaudit::report
