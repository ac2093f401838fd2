// Current sign convention: BESS i_dc positive = discharge.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfdia/plant.hpp"

namespace sfdia::plant {

inline constexpr const char* kGeneratorVersion = "sfdia-synth-1";

/// One 1-minute row: the plant state when the step began, and what it produced.
struct DatasetRow {
  PlantSnapshot start;
  PlantSample sample;
};

struct Dataset {
  int days = 0;
  std::uint64_t seed = 0;
  std::string generator_version = kGeneratorVersion;
  double dt = 60.0;
  std::vector<DatasetRow> rows;

  std::size_t size() const { return rows.size(); }
  Profiles profiles() const;
  /// Rows [first_day, first_day + n_days) as a standalone dataset.
  Dataset slice_days(int first_day, int n_days) const;
};

/// Runs the clean closed loop for `days` days. Throws Config if the plant
/// shuts down or leaves the BESS ratings under clean telemetry.
Dataset generate_dataset(const PlantConfig& config, int days, std::uint64_t seed);

void write_dataset_csv(const Dataset& ds, const PlantConfig& config, const std::filesystem::path& path);
Dataset read_dataset_csv(const PlantConfig& config, const std::filesystem::path& path);

}  // namespace sfdia::plant
