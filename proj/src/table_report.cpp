#include "curvecmp/table_report.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "curvecmp/error.hpp"
#include "reference_tables.hpp"

namespace curvecmp {

namespace {

struct Tolerances {
    double point, weight, efficiency, gamma, table5_weight;
};

Tolerances tolerances(const io::Json& ref) {
    const io::Json& t = ref.at("tolerances");
    return {t.at("point").get<double>(), t.at("weight_pct").get<double>(), t.at("efficiency_pct").get<double>(),
            t.at("gamma_pct").get<double>(), t.at("table5_weight_pct").get<double>()};
}

void design_cells(TableResult& out, const std::string& row, const Design& d, const io::Json& ref, double ptol,
                  double wtol) {
    const auto pts = ref.at("points").get<std::vector<double>>();
    const auto wts = ref.at("weights").get<std::vector<double>>();
    out.cells.push_back({row, "support size", static_cast<double>(d.size()), static_cast<double>(pts.size()), 0.0});
    if (d.size() != pts.size()) return;
    for (std::size_t j = 0; j < pts.size(); ++j)
        out.cells.push_back({row, "point " + std::to_string(j + 1), d.points()[j], pts[j], ptol});
    for (std::size_t j = 0; j < wts.size(); ++j)
        out.cells.push_back({row, "weight % " + std::to_string(j + 1), 100.0 * d.weights()[j], wts[j], wtol});
}

void table2(TableResult& out, TableRunner& runner, const io::Json& ref) {
    const Tolerances tol = tolerances(ref);
    for (const io::Json& e : ref.at("table2")) {
        const DoseModel m1 = dose_model_from_string(e.at("m1").get<std::string>());
        const DoseModel m2 = dose_model_from_string(e.at("m2").get<std::string>());
        const OptimizeResult& r = runner.mu_inf(m1, m2);
        const std::string pair = to_string(m1) + "/" + to_string(m2);
        design_cells(out, pair + " xi1 " + to_string(m1), r.xi1, e.at("xi1"), tol.point, tol.weight);
        design_cells(out, pair + " xi2 " + to_string(m2), r.xi2, e.at("xi2"), tol.point, tol.weight);
        out.reports.emplace_back(pair, r.report);
    }
}

void table3(TableResult& out, TableRunner& runner, const io::Json& ref) {
    const Tolerances tol = tolerances(ref);
    const io::Json& t = ref.at("table3");
    const auto& cols = t.at("columns");
    if (cols.size() != kEfficiencyColumns.size()) throw InvalidInput("reference table 3 has the wrong column count");
    for (std::size_t c = 0; c < cols.size(); ++c)
        if (dose_model_from_string(cols[c][0].get<std::string>()) != kEfficiencyColumns[c].first ||
            dose_model_from_string(cols[c][1].get<std::string>()) != kEfficiencyColumns[c].second)
            throw InvalidInput("reference table 3 columns are out of order");
    const std::vector<EfficiencyRow> rows = efficiency_table(runner);
    const io::Json& rrows = t.at("rows");
    if (rrows.size() != rows.size()) throw InvalidInput("reference table 3 has the wrong row count");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rrows[i].at("label").get<std::string>() != rows[i].label)
            throw InvalidInput("reference table 3 row '" + rows[i].label + "' is missing");
        const auto vals = rrows[i].at("values").get<std::vector<double>>();
        for (std::size_t c = 0; c < vals.size(); ++c) {
            const auto& [m1, m2] = kEfficiencyColumns[c];
            out.cells.push_back({rows[i].label, to_string(m1) + "/" + to_string(m2), rows[i].values[c], vals[c],
                                 tol.efficiency});
        }
    }
    for (const auto& [m1, m2] : kEfficiencyColumns) {
        out.reports.emplace_back(to_string(m1) + "/" + to_string(m2), runner.mu_inf(m1, m2).report);
        out.reports.emplace_back(to_string(m1) + " | D-optimal " + to_string(m2), runner.nu_inf(m1, m2).report);
        out.reports.emplace_back(to_string(m2) + " | D-optimal " + to_string(m1), runner.nu_inf(m2, m1).report);
    }
    for (DoseModel m : kDoseModels) out.reports.emplace_back("D-optimal " + to_string(m), runner.mu_inf(m, m).report);
}

void table4(TableResult& out, TableRunner& runner, const io::Json& ref) {
    const Tolerances tol = tolerances(ref);
    for (const io::Json& e : ref.at("table4")) {
        const DoseModel free = dose_model_from_string(e.at("free").get<std::string>());
        const DoseModel fixed = dose_model_from_string(e.at("fixed").get<std::string>());
        const OptimizeResult& r = runner.nu_inf(free, fixed);
        const std::string row = to_string(free) + " | D-optimal " + to_string(fixed);
        design_cells(out, row, r.xi1, e, tol.point, tol.weight);
        out.reports.emplace_back(row, r.report);
    }
}

void table5(TableResult& out, TableRunner& runner, const io::Json& ref) {
    const Tolerances tol = tolerances(ref);
    const io::Json& e = ref.at("table5");
    const DoseModel m1 = dose_model_from_string(e.at("m1").get<std::string>());
    const DoseModel m2 = dose_model_from_string(e.at("m2").get<std::string>());
    const OptimizeResult& r = runner.gamma(m1, m2, e.at("sigma2_factor").get<double>());
    const auto g = e.at("gamma").get<std::vector<double>>();
    out.cells.push_back({"gamma", "group 1 %", 100.0 * r.gamma.first, g.at(0), tol.gamma});
    out.cells.push_back({"gamma", "group 2 %", 100.0 * r.gamma.second, g.at(1), tol.gamma});
    design_cells(out, "xi1 " + to_string(m1), r.xi1, e.at("xi1"), tol.point, tol.table5_weight);
    design_cells(out, "xi2 " + to_string(m2), r.xi2, e.at("xi2"), tol.point, tol.table5_weight);
    out.reports.emplace_back(to_string(m1) + "/" + to_string(m2) + " flexible allocation", r.report);
}

std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace

bool TableCell::within() const noexcept { return std::abs(computed - reference) <= tolerance + 1e-12; }

std::size_t TableResult::failures() const {
    std::size_t n = 0;
    for (const auto& c : cells) n += !c.within();
    return n;
}

const io::Json& reference_tables() {
    static const io::Json j = io::Json::parse(generated::kReferenceTables);
    return j;
}

TableResult compute_table(int which, TableRunner& runner, const io::Json& reference) {
    TableResult out;
    out.which = which;
    switch (which) {
        case 2: table2(out, runner, reference); break;
        case 3: table3(out, runner, reference); break;
        case 4: table4(out, runner, reference); break;
        case 5: table5(out, runner, reference); break;
        default: throw InvalidInput("table must be 2, 3, 4 or 5, got " + std::to_string(which));
    }
    return out;
}

void write_csv(const TableResult& t, std::ostream& out) {
    out << "table,row,column,computed,reference,tolerance,difference,within_tolerance\n";
    out << std::setprecision(10);
    for (const TableCell& c : t.cells)
        out << t.which << ',' << quoted(c.row) << ',' << quoted(c.column) << ',' << c.computed << ',' << c.reference
            << ',' << c.tolerance << ',' << c.difference() << ',' << (c.within() ? "yes" : "no") << '\n';
}

}  // namespace curvecmp
