#pragma once

// On-disk run records and plot-data export.
//
// A record is a directory:
//   record.json   metadata header (schema version, config echo, map, patch
//                 stream, tick counts, wall time, real-time factor, abort)
//   metrics.csv   one row per metrics frame
//   states.csv    one row per (sampled tick, agent)
//   map.txt       obstacle records, same format as hand-authored maps

#include "swarmsim/engine.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace swarmsim {

class RecordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json gains_to_json(const OlfatiSaberGains& g);
nlohmann::json gains_to_json(const VasarhelyiGains& g);
/// Missing keys keep the value from `base`.
OlfatiSaberGains olfati_gains_from_json(const nlohmann::json& j, OlfatiSaberGains base);
VasarhelyiGains vasarhelyi_gains_from_json(const nlohmann::json& j, VasarhelyiGains base);

nlohmann::json patch_to_json(const ParamPatch& p);
/// Parses a patch. Partial gain blocks are completed from `base`.
/// `u_mig_heading_deg` (clockwise from north) with optional `u_mig_speed`
/// is accepted as an alternative to an explicit `u_mig` vector.
ParamPatch patch_from_json(const nlohmann::json& j, const SwarmParams& base);

std::vector<ParamPatch> read_patches(const std::filesystem::path& path, const SwarmParams& base);
void write_patches(const std::filesystem::path& path, const std::vector<ParamPatch>& patches);

nlohmann::json metrics_to_json(const MetricsFrame& f);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsFrame& f);
std::string metrics_csv(const std::vector<MetricsFrame>& frames);
std::string states_csv(const std::vector<StateSample>& samples);

nlohmann::json record_header(const RunRecord& rec);

/// Writes the record directory, creating it when needed.
void write_record(const std::filesystem::path& dir, const RunRecord& rec);

struct LoadedRecord {
    nlohmann::json header;
    std::vector<std::string> metric_columns;
    std::vector<std::vector<std::string>> metric_rows;  // raw text, no reformatting
    std::vector<std::string> state_columns;
    std::vector<std::vector<std::string>> state_rows;
};

/// Throws RecordError on missing files or schema-version mismatch.
LoadedRecord read_record(const std::filesystem::path& dir);

/// Writes distance.csv, speed.csv, accel.csv, order.csv, connectivity.csv,
/// safety.csv and trajectories.csv into `out_dir`; returns their paths.
std::vector<std::filesystem::path> export_plot_data(const std::filesystem::path& record_dir,
                                                    const std::filesystem::path& out_dir);

}  // namespace swarmsim
