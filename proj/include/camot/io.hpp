#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "camot/angle_estimator.hpp"
#include "camot/geometry.hpp"
#include "camot/tracker.hpp"

namespace camot::io {

/// One identified row of a MOT gt/result file.
struct TrackRow {
  long frame = 0;
  int id = 0;
  BBox box;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view field, const char* what, long line_no) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw parse_error("line " + std::to_string(line_no) + ": bad " + what + " field '" +
                      std::string(field) + "'");
  }
  return value;
}

inline long parse_long(std::string_view field, const char* what, long line_no) {
  field = trim(field);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw parse_error("line " + std::to_string(line_no) + ": bad " + what + " field '" +
                      std::string(field) + "'");
  }
  return value;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input_error("cannot open file: " + path);
  return in;
}

struct MotRow {
  long frame;
  long id;
  BBox box;
};

/// Shared strict parser for the 10-column MOT det/gt/result format.
inline MotRow parse_mot_row(const std::string& line, long line_no) {
  const auto fields = split_fields(line);
  if (fields.size() != 10) {
    throw parse_error("line " + std::to_string(line_no) + ": expected 10 fields, got " +
                      std::to_string(fields.size()));
  }
  MotRow row;
  row.frame = parse_long(fields[0], "frame", line_no);
  row.id = parse_long(fields[1], "id", line_no);
  row.box.left = parse_double(fields[2], "bb_left", line_no);
  row.box.top = parse_double(fields[3], "bb_top", line_no);
  row.box.w = parse_double(fields[4], "bb_width", line_no);
  row.box.h = parse_double(fields[5], "bb_height", line_no);
  row.box.conf = parse_double(fields[6], "conf", line_no);
  // Columns 8-10 (x, y, z placeholders) must parse but are not used.
  parse_double(fields[7], "x", line_no);
  parse_double(fields[8], "y", line_no);
  parse_double(fields[9], "z", line_no);

  if (row.frame < 1) {
    throw parse_error("line " + std::to_string(line_no) + ": frame must be >= 1");
  }
  if (!(row.box.w > 0.0) || !(row.box.h > 0.0)) {
    throw parse_error("line " + std::to_string(line_no) + ": box size must be positive");
  }
  if (row.box.conf < 0.0 || row.box.conf > 1.0) {
    throw parse_error("line " + std::to_string(line_no) + ": conf must lie in [0, 1]");
  }
  return row;
}

} // namespace detail

/// Reads a MOT detection file into frame -> boxes, file order preserved.
inline std::map<long, std::vector<BBox>> read_detections(const std::string& path) {
  std::ifstream in = detail::open_or_throw(path);
  std::map<long, std::vector<BBox>> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const detail::MotRow row = detail::parse_mot_row(line, line_no);
    out[row.frame].push_back(row.box);
  }
  return out;
}

/// Reads a MOT gt/result file as identified rows, file order preserved.
inline std::vector<TrackRow> read_tracks(const std::string& path) {
  std::ifstream in = detail::open_or_throw(path);
  std::vector<TrackRow> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const detail::MotRow row = detail::parse_mot_row(line, line_no);
    out.push_back({row.frame, static_cast<int>(row.id), row.box});
  }
  return out;
}

/// Writes tracker output in the MOT result format, two decimal places.
/// Results must arrive sorted by (frame, id).
inline void write_tracks(const std::string& path, const std::vector<TrackSnapshot>& results) {
  std::ofstream out(path);
  if (!out) throw invalid_input_error("cannot write file: " + path);
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%ld,%d,%.2f,%.2f,%.2f,%.2f,%.2f,-1,-1,-1\n", r.frame, r.id,
                  r.box.left, r.box.top, r.box.w, r.box.h, r.conf);
    out << buf;
  }
  if (!out) throw invalid_input_error("write failed: " + path);
}

/// Reads per-frame CMC transforms: rows "frame,a11,a12,a13,a21,a22,a23".
inline std::map<long, CmcTransform> read_cmc(const std::string& path) {
  std::ifstream in = detail::open_or_throw(path);
  std::map<long, CmcTransform> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 7) {
      throw parse_error("line " + std::to_string(line_no) + ": expected 7 fields, got " +
                        std::to_string(fields.size()));
    }
    const long frame = detail::parse_long(fields[0], "frame", line_no);
    CmcTransform t;
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 3; ++c) {
        t.m[r][c] = detail::parse_double(fields[static_cast<size_t>(1 + r * 3 + c)], "matrix",
                                         line_no);
      }
    }
    out[frame] = t;
  }
  return out;
}

/// Frames without an entry get the identity transform.
inline CmcTransform cmc_at(const std::map<long, CmcTransform>& cmc, long frame) {
  const auto it = cmc.find(frame);
  return it == cmc.end() ? CmcTransform::identity() : it->second;
}

/// Whole-run configuration: camera, estimator, and tracker settings read from
/// a key=value file. Unknown keys are rejected.
struct RunConfig {
  CameraIntrinsics cam = CameraIntrinsics::from_focal_mm(50.0, 1920, 1080);
  EstimatorConfig est;
  TrackerConfig trk;

  static RunConfig from_file(const std::string& path) {
    std::ifstream in = detail::open_or_throw(path);
    std::map<std::string, std::string> kv;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view v = detail::trim(line);
      if (v.empty() || v.front() == '#') continue;
      const size_t eq = v.find('=');
      if (eq == std::string_view::npos) {
        throw parse_error("line " + std::to_string(line_no) + ": expected key=value");
      }
      const std::string key(detail::trim(v.substr(0, eq)));
      const std::string value(detail::trim(v.substr(eq + 1)));
      if (key.empty() || value.empty()) {
        throw parse_error("line " + std::to_string(line_no) + ": empty key or value");
      }
      if (!kv.emplace(key, value).second) {
        throw parse_error("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      }
    }
    return from_keys(kv);
  }

  static RunConfig from_keys(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    const auto get_d = [&](const std::string& k) {
      return detail::parse_double(kv.at(k), k.c_str(), 0);
    };
    const auto get_l = [&](const std::string& k) {
      return detail::parse_long(kv.at(k), k.c_str(), 0);
    };
    const auto get_b = [&](const std::string& k) {
      const std::string& v = kv.at(k);
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw parse_error("key '" + k + "': expected a boolean, got '" + v + "'");
    };

    int width = 1920, height = 1080;
    if (kv.count("width")) width = static_cast<int>(get_l("width"));
    if (kv.count("height")) height = static_cast<int>(get_l("height"));
    double f_mm = 50.0;
    if (kv.count("f_mm")) f_mm = get_d("f_mm");
    cfg.cam = CameraIntrinsics::from_focal_mm(f_mm, width, height);
    if (kv.count("f_px")) cfg.cam.f_px = get_d("f_px");
    if (kv.count("cx")) cfg.cam.cx = get_d("cx");
    if (kv.count("cy")) cfg.cam.cy = get_d("cy");

    if (kv.count("theta0_deg")) cfg.est.theta0 = deg2rad(get_d("theta0_deg"));
    if (kv.count("n_plane")) cfg.est.n_plane = static_cast<int>(get_l("n_plane"));
    if (kv.count("lambda_n")) cfg.est.lambda_n = get_d("lambda_n");
    if (kv.count("lambda_theta")) cfg.est.lambda_theta = get_d("lambda_theta");
    if (kv.count("lambda_regr")) cfg.est.lambda_regr = get_d("lambda_regr");
    if (kv.count("tau_eps")) cfg.est.tau_eps = get_d("tau_eps");
    if (kv.count("H")) cfg.est.H = get_d("H");
    if (kv.count("fps")) cfg.est.fps = get_d("fps");
    if (kv.count("max_iters")) cfg.est.max_iters = static_cast<int>(get_l("max_iters"));
    if (kv.count("mode")) {
      const std::string& m = kv.at("mode");
      if (m == "paper") {
        cfg.est.lift_mode = LiftMode::paper;
      } else if (m == "exact") {
        cfg.est.lift_mode = LiftMode::exact;
      } else {
        throw parse_error("key 'mode': expected paper|exact, got '" + m + "'");
      }
    }

    if (kv.count("tau_high")) cfg.trk.tau_high = get_d("tau_high");
    if (kv.count("tau_low")) cfg.trk.tau_low = get_d("tau_low");
    if (kv.count("lost_buffer")) cfg.trk.lost_buffer = static_cast<int>(get_l("lost_buffer"));
    if (kv.count("match_thresh_first")) cfg.trk.match_thresh_first = get_d("match_thresh_first");
    if (kv.count("match_thresh_second")) {
      cfg.trk.match_thresh_second = get_d("match_thresh_second");
    }
    if (kv.count("min_hits")) cfg.trk.min_hits = static_cast<int>(get_l("min_hits"));
    if (kv.count("sigma_p")) cfg.trk.sigma_p = get_d("sigma_p");
    if (kv.count("sigma_v")) cfg.trk.sigma_v = get_d("sigma_v");
    if (kv.count("use_angle_aware")) cfg.trk.use_angle_aware = get_b("use_angle_aware");
    if (kv.count("use_depth")) cfg.trk.use_depth = get_b("use_depth");

    static const std::vector<std::string> known = {
        "width",      "height",        "f_mm",
        "f_px",       "cx",            "cy",
        "theta0_deg", "n_plane",       "lambda_n",
        "lambda_theta", "lambda_regr", "tau_eps",
        "H",          "fps",           "max_iters",
        "mode",       "tau_high",      "tau_low",
        "lost_buffer", "match_thresh_first", "match_thresh_second",
        "min_hits",   "sigma_p",       "sigma_v",
        "use_angle_aware", "use_depth"};
    for (const auto& [k, v] : kv) {
      (void)v;
      if (std::find(known.begin(), known.end(), k) == known.end()) {
        throw parse_error("unknown config key '" + k + "'");
      }
    }

    cfg.cam.validate();
    cfg.est.validate();
    cfg.trk.validate();
    return cfg;
  }
};

} // namespace camot::io
