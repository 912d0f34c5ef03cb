#pragma once

#include "nsc/controller.hpp"
#include "nsc/dac.hpp"

#include <string>
#include <vector>

namespace nsc {

/// %.17g: round-trips every double.
std::string format_double(double v);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// One row per fast sample:
/// t, x0.., u0.., w_hat0.., cost_inst, cost_cum, slow_k, param_hash
/// cost_inst is the integral of c over the sample interval and cost_cum its running sum.
std::string run_csv(const RunLog& log);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a column; throws if absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> numeric(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
std::string read_file(const std::string& path);

/// Binary checkpoint: the 8 bytes "NSCDAC01" followed by DacParams::to_flat() as
/// little-endian float64.
void write_checkpoint(const std::string& path, const DacParams& params);
DacParams read_checkpoint(const std::string& path, const DacClass& cls);

}  // namespace nsc
