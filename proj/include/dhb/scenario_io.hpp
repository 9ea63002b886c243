#pragma once

#include <filesystem>

#include "dhb/binary_io.hpp"
#include "dhb/smbm.hpp"

namespace dhb {

inline constexpr char kScenarioMagic[9] = "DHBSCEN1";
inline constexpr std::uint64_t kScenarioVersion = 1;

// Header: seed, dt, n_paths, exercise dates, alive schedule (last grid index
// of every rate), params fingerprint, config fingerprint. Body: the raw
// path-major state array.
inline std::vector<char> encode_scenarios(const ScenarioSet& s, std::uint64_t config_fingerprint) {
    io::Writer w;
    io::write_header(w, kScenarioMagic, kScenarioVersion);
    w.u64(s.seed);
    w.f64(s.grid.dt());
    w.u64(static_cast<std::uint64_t>(s.n_paths));
    w.array(s.grid.dates());
    std::vector<std::uint64_t> last_step;
    for (int u = 1; u < s.grid.terminal_index(); ++u) last_step.push_back(static_cast<std::uint64_t>(s.grid.step_of(u)));
    w.array(last_step);
    w.u64(s.params_fingerprint);
    w.u64(config_fingerprint);
    w.array(s.data);
    return w.buffer();
}

struct LoadedScenarios {
    ScenarioSet set;
    std::uint64_t config_fingerprint = 0;
};

inline LoadedScenarios decode_scenarios(std::vector<char> bytes) {
    io::Reader r(std::move(bytes));
    io::check_header(r, kScenarioMagic, kScenarioVersion, "scenario file");
    LoadedScenarios out;
    out.set.seed = r.u64();
    const double dt = r.f64();
    out.set.n_paths = static_cast<int>(r.u64());
    auto dates = r.array<double>();
    out.set.grid = TimeGrid(std::move(dates), dt);
    auto last_step = r.array<std::uint64_t>();
    for (int u = 1; u < out.set.grid.terminal_index(); ++u) {
        if (last_step.at(static_cast<std::size_t>(u - 1)) != static_cast<std::uint64_t>(out.set.grid.step_of(u)))
            throw IoError("scenario file: alive schedule inconsistent with dates");
    }
    out.set.params_fingerprint = r.u64();
    out.config_fingerprint = r.u64();
    out.set.data = r.array<double>();
    if (out.set.data.size() != static_cast<std::size_t>(out.set.n_paths) * out.set.stride_path())
        throw IoError("scenario file: data size does not match header");
    if (!r.at_end()) throw IoError("scenario file: trailing bytes");
    return out;
}

inline void save_scenarios(const std::filesystem::path& path, const ScenarioSet& s, std::uint64_t config_fp) {
    auto bytes = encode_scenarios(s, config_fp);
    io::write_file_atomic(path, bytes);
}

inline LoadedScenarios load_scenarios(const std::filesystem::path& path) {
    return decode_scenarios(io::read_file(path));
}

}  // namespace dhb
