#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "curvecmp/io.hpp"
#include "curvecmp/tables.hpp"

namespace curvecmp {

/// One recomputed table entry next to its published value.
struct TableCell {
    std::string row;
    std::string column;
    double computed = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;

    double difference() const noexcept { return computed - reference; }
    bool within() const noexcept;
};

struct TableResult {
    int which = 0;
    std::vector<TableCell> cells;
    /// Certification of every optimized design that enters the table.
    std::vector<std::pair<std::string, EquivalenceReport>> reports;

    std::size_t failures() const;
};

/// Published values (embedded at build time).
const io::Json& reference_tables();

/// Recomputes table 2, 3, 4 or 5 and pairs every entry with its published value.
TableResult compute_table(int which, TableRunner& runner, const io::Json& reference = reference_tables());

/// CSV with columns table,row,column,computed,reference,tolerance,difference,within_tolerance.
void write_csv(const TableResult& t, std::ostream& out);

}  // namespace curvecmp
