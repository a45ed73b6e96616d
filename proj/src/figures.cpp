#include "pricing/figures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "pricing/csv.hpp"
#include "pricing/error.hpp"

namespace pricing::app {
namespace {

namespace fs = std::filesystem;

struct Series {
    std::string x_label, y_label;
    std::vector<double> x, y;
};

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + path.string());
    out << text;
}

std::string fmt(double v) { return csv::format_number(v); }

// Bare-bones line chart; enough to eyeball the shape.
std::string svg_chart(const std::string& title, const Series& s) {
    constexpr double W = 480, H = 300, L = 60, R = 20, T = 30, B = 40;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">" << s.x_label
      << "</text>\n";
    o << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\">" << s.y_label << "</text>\n";
    if (!s.x.empty()) {
        auto [xmin, xmax] = std::minmax_element(s.x.begin(), s.x.end());
        auto [ymin, ymax] = std::minmax_element(s.y.begin(), s.y.end());
        double x0 = *xmin, x1 = *xmax, y0 = std::min(0.0, *ymin), y1 = *ymax;
        if (x1 == x0) x1 = x0 + 1;
        if (y1 == y0) y1 = y0 + 1;
        auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
        auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
        o << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << px(s.x[i]) << "," << py(s.y[i]);
        o << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
        o << "<text x=\"" << L - 4 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(y1)
          << "</text>\n";
        o << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(y0)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols) {
    std::vector<std::vector<std::string>> rows;
    const std::size_t n = cols.empty() ? 0 : cols.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row;
        for (const auto& c : cols) row.push_back(fmt(c[i]));
        rows.push_back(std::move(row));
    }
    csv::write(path, header, rows);
}

} // namespace

std::vector<fs::path> emit_figure_data(const fs::path& run_dir) {
    std::vector<fs::path> files;
    fs::path plan_path = run_dir / "plan.csv";
    const fs::path sweep_path = run_dir / "sweep.csv";
    std::optional<csv::Table> sweep;
    if (fs::exists(sweep_path)) {
        sweep = csv::read(sweep_path);
        csv::require_header(*sweep, {"alpha", "status", "objective", "sell_through", "mean_price"}, sweep_path.string());
        if (sweep->rows.empty()) throw ParseError(sweep_path.string() + ": no sweep rows");
        plan_path = run_dir / ("plan_alpha_" + sweep->rows.front()[0] + ".csv");
    }
    if (!fs::exists(plan_path)) throw NotFound("figures need " + plan_path.string());

    auto plan = csv::read(plan_path);
    const auto prices = plan.column("price");
    const auto demand = plan.column("demand");
    const auto revenue = plan.column("revenue");

    std::vector<double> week, price, dem, rev;
    for (std::size_t i = 0; i < plan.rows.size(); ++i) {
        week.push_back(static_cast<double>(i + 1));
        price.push_back(csv::to_double(plan.rows[i][prices], plan_path.string()));
        dem.push_back(csv::to_double(plan.rows[i][demand], plan_path.string()));
        rev.push_back(csv::to_double(plan.rows[i][revenue], plan_path.string()));
    }

    write_csv(run_dir / "fig2.csv", {"week", "price", "demand"}, {week, price, dem});
    write_csv(run_dir / "fig3.csv", {"week", "price", "revenue"}, {week, price, rev});
    write_file(run_dir / "fig2.svg", svg_chart("Planned demand by week", {"week", "demand", week, dem}));
    write_file(run_dir / "fig3.svg", svg_chart("Planned revenue by week", {"week", "revenue", week, rev}));
    files.insert(files.end(), {run_dir / "fig2.csv", run_dir / "fig2.svg", run_dir / "fig3.csv", run_dir / "fig3.svg"});

    bool infeasible = plan.rows.empty();
    if (sweep) {
        // one row per alpha; an infeasible alpha keeps its row with empty values
        std::vector<std::vector<std::string>> rows;
        std::vector<double> alpha, mean;
        for (const auto& row : sweep->rows) {
            if (row.size() < 5) throw ParseError(sweep_path.string() + ": short row");
            rows.push_back({row[0], row[2], row[4]});
            if (row[1] != "optimal") {
                infeasible = true;
                continue;
            }
            alpha.push_back(csv::to_double(row[0], sweep_path.string()));
            mean.push_back(csv::to_double(row[4], sweep_path.string()));
        }
        csv::write(run_dir / "fig4.csv", {"alpha", "objective", "mean_price"}, rows);
        write_file(run_dir / "fig4.svg", svg_chart("Mean planned price vs sell-through", {"alpha", "mean price", alpha, mean}));
        files.insert(files.end(), {run_dir / "fig4.csv", run_dir / "fig4.svg"});
    } else {
        fs::remove(run_dir / "fig4.csv");
        fs::remove(run_dir / "fig4.svg");
    }
    if (infeasible) {
        write_file(run_dir / "figures_status.txt",
                   "infeasible: at least one plan has no solution; its figure data is empty\n");
        files.push_back(run_dir / "figures_status.txt");
    } else {
        fs::remove(run_dir / "figures_status.txt");
    }
    return files;
}

} // namespace pricing::app
