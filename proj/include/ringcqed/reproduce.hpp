#pragma once

// Canned reference runs: curves as CSV tables plus a summary of the derived
// quantities.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ringcqed/dynamics.hpp"
#include "ringcqed/io.hpp"

namespace ringcqed {

struct FigureBundle {
    std::string name;
    std::vector<std::pair<std::string, CsvTable>> tables;  ///< file name, contents
    nlohmann::json summary;
    /// Every correlation curve written, for consistency checks.
    std::vector<CorrelationCurve> curves;
};

/// Names accepted by reproduce().
const std::vector<std::string>& figure_names();

/// fig3: four-emitter ensemble at three phase-disorder values, full and bad-cavity models.
/// fig4a: single chiral emitter with backscattering.
/// fig4e: cavity-detuning sweep of a disordered four-emitter ensemble.
/// g2cmp: effective against full model for eps in {0.2, 0.1, 0.05}, d in {1, 2}.
/// fig5e: pulsed pair generation with an emitter on the signal mode.
/// Every recipe is deterministic. Throws ValidationError for an unknown name.
FigureBundle reproduce(const std::string& figure, const OdeOptions& options = {}, unsigned workers = 0);

/// Table with columns tau_s and one value column per curve; all curves must
/// share the delay grid.
CsvTable curves_table(const std::vector<std::pair<std::string, const CorrelationCurve*>>& columns);

}  // namespace ringcqed
