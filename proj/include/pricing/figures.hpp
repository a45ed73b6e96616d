#pragma once

#include <filesystem>
#include <vector>

namespace pricing::app {

// Reads the plan/sweep exports in `run_dir` and writes
//   fig2.csv  week,price,demand
//   fig3.csv  week,price,revenue
//   fig4.csv  alpha,objective,mean_price   (sweep runs only)
// plus a static SVG line chart for each. A sweep run charts its lowest alpha
// in fig2/fig3. An infeasible plan yields header-only CSVs and a
// figures_status.txt note. Returns the files written.
std::vector<std::filesystem::path> emit_figure_data(const std::filesystem::path& run_dir);

} // namespace pricing::app
