#include "servobench/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "servobench/errors.hpp"
#include "servobench/kinematics.hpp"

namespace servobench {

std::array<std::uint8_t, 3> RgbImage::pixel(std::size_t col, std::size_t row) const {
  const std::size_t i = 3 * (row * width + col);
  return {data.at(i), data.at(i + 1), data.at(i + 2)};
}

double enhance_value(double r, double g, double b, double k) { return r + k * std::max(r - b, 0.0) - g; }

double vanilla_gray(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

GrayImage enhance(const RgbImage& image, const EnhancementParams& params) {
  if (!(params.k > 0.0) || !std::isfinite(params.k)) throw InvalidArgument("enhancement factor k must be > 0");
  if (image.data.size() != 3 * image.width * image.height) throw InvalidArgument("image buffer size mismatch");
  GrayImage out{image.width, image.height, std::vector<std::uint8_t>(image.width * image.height)};
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double v = enhance_value(image.data[3 * i], image.data[3 * i + 1], image.data[3 * i + 2], params.k);
    out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
  return out;
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(tok, &pos);
    if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InvalidArgument(path.string() + ": bad header field '" + tok + "'");
  }
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  if (next_token(in) != "P6") throw InvalidArgument(path.string() + ": not a binary P6 pixmap");
  RgbImage img;
  img.width = parse_dim(next_token(in), path);
  img.height = parse_dim(next_token(in), path);
  if (parse_dim(next_token(in), path) != 255) throw InvalidArgument(path.string() + ": only maxval 255 is supported");
  img.data.resize(3 * img.width * img.height);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
    throw InvalidArgument(path.string() + ": truncated pixel data");
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

std::optional<std::size_t> reject(const ScoreVector& sv) {
  const auto best = std::max_element(sv.scores.begin(), sv.scores.end());  // first maximum
  if (!(*best >= sv.threshold)) return std::nullopt;
  return static_cast<std::size_t>(best - sv.scores.begin());
}

SmoothedTrack::SmoothedTrack(double a, std::size_t max_hold) : a_(a), max_hold_(max_hold) {
  if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("filter coefficient must lie in [0, 1]");
}

const PlanarEstimate& SmoothedTrack::update(const std::optional<PlanarEstimate>& obs) {
  if (stale()) throw StaleTrack("update on a stale track");
  if (!obs) {
    if (initialized_) ++frames_since_seen_;
    return last_;
  }
  if (!initialized_) {
    last_ = *obs;
    last_.theta = normalize_angle(last_.theta);
    initialized_ = true;
  } else {
    last_.x = a_ * last_.x + (1.0 - a_) * obs->x;
    last_.y = a_ * last_.y + (1.0 - a_) * obs->y;
    // Shortest-arc blend: move (1 - a) of the way along the minimal difference.
    last_.theta = normalize_angle(last_.theta + (1.0 - a_) * angle_diff(obs->theta, last_.theta));
  }
  frames_since_seen_ = 0;
  return last_;
}

SmoothedTrack smooth_update(SmoothedTrack track, const std::optional<PlanarEstimate>& observation) {
  track.update(observation);
  return track;
}

PrecisionMetrics precision_metrics(const EstimateSequence& seq) {
  double sx = 0.0, sy = 0.0, sz = 0.0, ss = 0.0, sc = 0.0;
  std::size_t l = 0;
  for (const EstimateSample& s : seq) {
    if (!s.detected) continue;
    sx += s.x;
    sy += s.y;
    sz += s.z;
    ss += std::sin(s.theta);
    sc += std::cos(s.theta);
    ++l;
  }
  if (l < 2) throw InsufficientData("precision metrics need at least two detected samples");
  const double n = static_cast<double>(l);
  const double mx = sx / n, my = sy / n, mz = sz / n;
  const double mtheta = std::atan2(ss, sc);

  double pos = 0.0, att = 0.0;
  for (const EstimateSample& s : seq) {
    if (!s.detected) continue;
    pos += (s.x - mx) * (s.x - mx) + (s.y - my) * (s.y - my) + (s.z - mz) * (s.z - mz);
    const double d = angle_diff(s.theta, mtheta);
    att += d * d;
  }
  return {std::sqrt(pos / (n - 1.0)), std::sqrt(att / (n - 1.0))};
}

EstimateSequence synth_stream(const SynthParams& p) {
  if (!(p.dropout >= 0.0 && p.dropout <= 1.0)) throw InvalidArgument("dropout probability must lie in [0, 1]");
  if (!(p.sigma_pos >= 0.0) || !(p.sigma_att >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  EstimateSequence seq;
  seq.reserve(p.length);
  for (std::size_t i = 0; i < p.length; ++i) {
    // Draw every variate on every frame so the noise sequence does not depend
    // on which frames drop out.
    const double nx = unit(rng), ny = unit(rng), nt = unit(rng);
    const double u = u01(rng);
    EstimateSample s;
    s.t = static_cast<double>(i) * p.frame_dt;
    s.detected = u >= p.dropout && p.dropout < 1.0;
    if (s.detected) {
      s.x = p.true_pose.x + p.sigma_pos * nx;
      s.y = p.true_pose.y + p.sigma_pos * ny;
      s.theta = normalize_angle(p.true_pose.theta + p.sigma_att * nt);
    }
    seq.push_back(s);
  }
  return seq;
}

EstimateSequence filter_stream(const EstimateSequence& raw, double a, std::size_t max_hold) {
  SmoothedTrack track(a, max_hold);
  EstimateSequence out;
  out.reserve(raw.size());
  for (const EstimateSample& s : raw) {
    EstimateSample f;
    f.t = s.t;
    std::optional<PlanarEstimate> obs;
    if (s.detected) obs = PlanarEstimate{s.x, s.y, s.theta};
    if (track.stale()) {
      if (!obs) {
        f.detected = false;
        out.push_back(f);
        continue;
      }
      track = SmoothedTrack(a, max_hold);  // reacquired: start a new track
    }
    const PlanarEstimate& p = track.update(obs);
    f.detected = track.initialized() && !track.stale();
    if (f.detected) {
      f.x = p.x;
      f.y = p.y;
      f.theta = p.theta;
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace servobench
