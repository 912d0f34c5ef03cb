#include "nsc/report.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nsc {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string run_csv(const RunLog& log) {
    std::string out;
    if (log.samples.empty()) return out;
    const auto dx = log.samples.front().x.size();
    const auto du = log.samples.front().u.size();
    out += "t";
    for (Eigen::Index i = 0; i < dx; ++i) out += ",x" + std::to_string(i);
    for (Eigen::Index i = 0; i < du; ++i) out += ",u" + std::to_string(i);
    for (Eigen::Index i = 0; i < dx; ++i) out += ",w_hat" + std::to_string(i);
    out += ",cost_inst,cost_cum,slow_k,param_hash\n";
    double cum = 0.0;
    for (const auto& r : log.samples) {
        cum += r.cost_interval;
        out += format_double(r.t);
        for (Eigen::Index i = 0; i < dx; ++i) out += "," + format_double(r.x(i));
        for (Eigen::Index i = 0; i < du; ++i) out += "," + format_double(r.u(i));
        for (Eigen::Index i = 0; i < dx; ++i) out += "," + format_double(r.w_hat(i));
        out += "," + format_double(r.cost_interval) + "," + format_double(cum) + "," + std::to_string(r.slow_k) + "," +
               hex64(r.param_hash) + "\n";
    }
    return out;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error("csv: no column '" + name + "'");
}

std::vector<double> CsvTable::numeric(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const std::string& cell = r.at(c);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') throw Error("csv: non-numeric cell '" + cell + "' in " + name);
        out.push_back(v);
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size()) throw Error("csv: row width differs from header");
            t.rows.push_back(std::move(cells));
        }
    }
    if (first) throw Error("csv: empty input");
    return t;
}

namespace {
constexpr char kMagic[8] = {'N', 'S', 'C', 'D', 'A', 'C', '0', '1'};
}

void write_checkpoint(const std::string& path, const DacParams& params) {
    const std::vector<double> flat = params.to_flat();
    std::string bytes(kMagic, sizeof kMagic);
    bytes.append(reinterpret_cast<const char*>(flat.data()), flat.size() * sizeof(double));
    write_file_atomic(path, bytes);
}

DacParams read_checkpoint(const std::string& path, const DacClass& cls) {
    const std::string bytes = read_file(path);
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw Error("checkpoint " + path + ": bad magic");
    const std::size_t payload = bytes.size() - sizeof kMagic;
    if (payload % sizeof(double) != 0) throw Error("checkpoint " + path + ": truncated payload");
    std::vector<double> flat(payload / sizeof(double));
    std::memcpy(flat.data(), bytes.data() + sizeof kMagic, payload);
    return DacParams::from_flat(flat, cls);
}

}  // namespace nsc
