#pragma once

// Plot-ready CSV and JSON forms of fields, trajectories, spectra, diagrams
// and scenarios. Numbers use the shortest round-trip form, so repeated
// runs produce identical bytes.

#include <iosfwd>

#include <json.hpp>

#include "nod/response.hpp"

namespace nod {

using Json = nlohmann::ordered_json;

/// (theta,value) rows.
void write_field_csv(std::ostream& os, const RealField& f);
/// Reads (theta,value) rows; the row count fixes the grid size.
RealField read_field_csv(std::istream& is);

/// (k,re,im) rows for k = -N/2 .. N/2-1.
void write_spectral_csv(std::ostream& os, const SpectralField& f);

/// Long format (t,theta,z), one row per recorded sample.
void write_trajectory_csv(std::ostream& os, const SimResult& sim);

/// {reached_steady, t_end, max_z, n_peaks}.
Json summary_json(const SimResult& sim, double rel_threshold = 0.5);

/// {lambda: [{k, value}...], k_max, alpha_star, leading_eigenvalue}.
Json to_json(const SpectrumReport& report);

Json to_json(const ValidationReport& report);

Json to_json(const BifurcationDiagram& diagram);
/// (alpha,norm,stable,n_peaks) rows, one per branch point.
void write_diagram_csv(std::ostream& os, const BifurcationDiagram& diagram);

Json to_json(const ScenarioSpec& spec);
/// Rejects unknown keys and validates the result.
ScenarioSpec scenario_from_json(const Json& j);

/// {chosen_gap, decision_time, switched, opinion_max, ambiguous}.
Json to_json(const Decision& decision);

/// (final_width,switched,chosen_gap) rows.
void write_switching_csv(std::ostream& os, const std::vector<SwitchSample>& samples);

/// Throws ParseError if `j` is not an object or has a key outside `allowed`.
void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& context);

}  // namespace nod
