#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "maopt/errors.hpp"
#include "maopt/types.hpp"

namespace maopt {

using ordered_json = nlohmann::ordered_json;

// StatisticalCsi <-> JSON. Keys are written in the fixed order
// wavelength, wavevectors, power, user_path_ranges, los_index; nlohmann
// prints doubles with round-trip (17 digit) precision. Path ranges are
// zero-based half-open [start, end).
inline ordered_json to_json(const StatisticalCsi& csi) {
  ordered_json j;
  j["wavelength"] = csi.wavelength;
  ordered_json wv = ordered_json::array();
  for (const auto& w : csi.wavevectors) wv.push_back({w.kx, w.ky});
  j["wavevectors"] = std::move(wv);
  ordered_json pw = ordered_json::array();
  for (int l = 0; l < csi.power.rows(); ++l) {
    ordered_json row = ordered_json::array();
    for (int k = 0; k < csi.power.cols(); ++k) row.push_back(csi.power(l, k));
    pw.push_back(std::move(row));
  }
  j["power"] = std::move(pw);
  ordered_json ranges = ordered_json::array();
  for (const auto& r : csi.user_path_ranges) ranges.push_back({r.start, r.end});
  j["user_path_ranges"] = std::move(ranges);
  ordered_json los = ordered_json::array();
  for (int k = 0; k < csi.num_users(); ++k) {
    if (k < static_cast<int>(csi.los_index.size()) && csi.los_index[k])
      los.push_back(*csi.los_index[k]);
    else
      los.push_back(nullptr);
  }
  j["los_index"] = std::move(los);
  return j;
}

inline StatisticalCsi csi_from_json(const ordered_json& j) {
  try {
    StatisticalCsi csi;
    csi.wavelength = j.at("wavelength").get<double>();
    for (const auto& w : j.at("wavevectors")) csi.wavevectors.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    const auto& pw = j.at("power");
    const auto L = static_cast<Eigen::Index>(pw.size());
    const auto K = L > 0 ? static_cast<Eigen::Index>(pw.at(0).size()) : 0;
    csi.power.resize(L, K);
    for (Eigen::Index l = 0; l < L; ++l) {
      if (static_cast<Eigen::Index>(pw.at(l).size()) != K)
        fail(ErrorKind::invalid_input, "csi_from_json", "ragged power matrix");
      for (Eigen::Index k = 0; k < K; ++k) csi.power(l, k) = pw.at(l).at(k).get<double>();
    }
    for (const auto& r : j.at("user_path_ranges")) csi.user_path_ranges.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
    if (j.contains("los_index")) {
      for (const auto& v : j.at("los_index")) {
        if (v.is_null())
          csi.los_index.emplace_back(std::nullopt);
        else
          csi.los_index.emplace_back(v.get<int>());
      }
    }
    csi.validate();
    return csi;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, "csi_from_json", e.what());
  }
}

inline ordered_json to_json(const AntennaLayout& layout) {
  ordered_json j;
  j["x"] = std::vector<double>(layout.x.data(), layout.x.data() + layout.size());
  j["y"] = std::vector<double>(layout.y.data(), layout.y.data() + layout.size());
  return j;
}

inline AntennaLayout layout_from_json(const ordered_json& j) {
  try {
    const auto xs = j.at("x").get<std::vector<double>>();
    const auto ys = j.at("y").get<std::vector<double>>();
    return {Eigen::Map<const RVector>(xs.data(), static_cast<Eigen::Index>(xs.size())),
            Eigen::Map<const RVector>(ys.data(), static_cast<Eigen::Index>(ys.size()))};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_input, "layout_from_json", e.what());
  }
}

inline ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "read_json_file", "cannot open " + path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, "read_json_file", path + ": " + e.what());
  }
}

/// FNV-1a over the canonical dump; stable across platforms, used to stamp
/// output files with the configuration they came from.
inline std::string config_hash(const ordered_json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

}  // namespace maopt
