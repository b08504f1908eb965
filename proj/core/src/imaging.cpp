#include "mistnormal/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <random>
#include <string>

namespace mistnormal::imaging {

using Eigen::Vector2d;
using Eigen::Vector3d;

void Intrinsics::validate() const {
  require(width > 0 && height > 0, "camera resolution must be positive");
  require(focal_px > 0.0 && std::isfinite(focal_px), "focal length must be positive");
  require(std::isfinite(cx) && std::isfinite(cy), "principal point must be finite");
}

Intrinsics Intrinsics::centered(int width, int height, double focal_px) {
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.focal_px = focal_px;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  k.validate();
  return k;
}

Vector2d project(const CameraView& view, const Vector3d& world) {
  const Vector3d cam = view.pose.rotation.transpose() * (world - view.pose.position);
  require(cam.z() > 0.0, "point is behind the camera");
  const auto& k = view.intrinsics;
  return {k.cx + k.focal_px * cam.x() / cam.z(), k.cy + k.focal_px * cam.y() / cam.z()};
}

void NoiseModel::validate() const {
  require(boundary_jitter_sigma_px >= 0.0 && std::isfinite(boundary_jitter_sigma_px),
          "jitter sigma must be non-negative");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout rate must lie in [0, 1)");
  require(jitter_cell_px > 0.0, "jitter lattice spacing must be positive");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double pixel_uniform(std::uint64_t seed, int x, int y) {
  const std::uint64_t key = seed ^ splitmix64((static_cast<std::uint64_t>(y) << 32) | static_cast<std::uint32_t>(x));
  return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
}

// Gaussian lattice interpolated with variance-preserving bilinear weights, so
// the field has unit standard deviation everywhere.
class JitterField {
 public:
  JitterField(int width, int height, double cell, std::uint64_t seed)
      : cell_(cell),
        nx_(static_cast<int>(std::ceil(width / cell)) + 2),
        ny_(static_cast<int>(std::ceil(height / cell)) + 2),
        values_(static_cast<std::size_t>(nx_) * ny_) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x6A09E667F3BCC909ull));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : values_) v = normal(rng);
  }

  double at(double px, double py) const {
    const double gx = std::clamp(px / cell_, 0.0, nx_ - 1.000001);
    const double gy = std::clamp(py / cell_, 0.0, ny_ - 1.000001);
    const int ix = static_cast<int>(gx);
    const int iy = static_cast<int>(gy);
    const double fx = gx - ix;
    const double fy = gy - iy;
    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
    const double sum = w00 * node(ix, iy) + w10 * node(ix + 1, iy) + w01 * node(ix, iy + 1) +
                       w11 * node(ix + 1, iy + 1);
    return sum / std::sqrt(w00 * w00 + w10 * w10 + w01 * w01 + w11 * w11);
  }

 private:
  double node(int ix, int iy) const { return values_[static_cast<std::size_t>(iy) * nx_ + ix]; }

  double cell_;
  int nx_;
  int ny_;
  std::vector<double> values_;
};

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
}

class BackdropSampler {
 public:
  BackdropSampler(const scene::Background& bg, const Vector3d& center) : bg_(bg), center_(center) {
    if (!bg.image.empty()) {
      height_mm_ = bg.width_mm * bg.image.height() / bg.image.width();
    }
  }

  int channels() const { return bg_.image.empty() ? 1 : bg_.image.channels(); }

  // Colour seen along a ray toward the backdrop at x = center.x + side * distance.
  void sample(const Vector3d& origin, const Vector3d& dir, double side, double gain,
              std::array<double, 3>& out) const {
    if (bg_.placement == scene::BackgroundPlacement::Textureless || bg_.image.empty()) {
      out.fill(gain * bg_.level);
      return;
    }
    const double target_x = center_.x() + side * bg_.distance_mm;
    if (dir.x() * side <= 1e-12) {
      out.fill(gain * bg_.level);
      return;
    }
    const double t = (target_x - origin.x()) / dir.x();
    const Vector3d hit = origin + t * dir;
    const double u = (hit.y() - center_.y()) / bg_.width_mm + 0.5;
    const double v = 0.5 - (hit.z() - center_.z()) / height_mm_;
    const int col = std::clamp(static_cast<int>(std::floor(u * bg_.image.width())), 0, bg_.image.width() - 1);
    const int row = std::clamp(static_cast<int>(std::floor(v * bg_.image.height())), 0, bg_.image.height() - 1);
    const std::uint8_t* p = bg_.image.pixel(col, row);
    for (int c = 0; c < bg_.image.channels(); ++c) out[c] = gain * p[c];
  }

 private:
  const scene::Background& bg_;
  Vector3d center_;
  double height_mm_ = 1.0;
};

}  // namespace

RenderedFrame render_view(const scene::Scene& scene, const CameraView& view, double now_s,
                          const NoiseModel& noise) {
  noise.validate();
  view.intrinsics.validate();
  scene.plane.validate();
  scene.mist.validate();
  scene.background.validate();

  const auto& plane = scene.plane;
  const auto& k = view.intrinsics;
  const auto& pose = view.pose;
  const Vector3d n = plane.normal();
  const Vector3d u_axis = plane.horizontal_axis();
  const Vector3d w_axis = plane.vertical_axis();
  const Vector3d rel = pose.position - plane.center;
  const double h = n.dot(rel);
  // Edge-on or from behind: the front face projects to zero area.
  if (h <= 1e-9 || std::abs(n.dot(pose.forward())) < 1e-6) {
    throw Error(ErrorKind::DegenerateView, "camera does not see the front of the plane");
  }

  const double visibility = scene::mist_visibility(scene.mist, now_s);
  const bool mirror = plane.surface_kind == scene::SurfaceKind::Mirror;
  const double gain = mirror ? scene.appearance.mirror_reflectance : scene.appearance.glass_transmittance;
  const double mist_gray = scene.appearance.mist_gray;
  const double sigma = noise.boundary_jitter_sigma_px;
  const double jitter_cap = 5.0 * sigma;

  BackdropSampler backdrop(scene.background, plane.center);
  const int channels = backdrop.channels();
  const bool reflected = scene.background.placement == scene::BackgroundPlacement::Reflected;

  RenderedFrame frame;
  frame.image = Image(k.width, k.height, channels);
  frame.truth_mask = Mask(k.width, k.height);
  frame.timestamp_s = now_s;
  frame.visibility = visibility;

  std::optional<JitterField> jitter;
  if (sigma > 0.0) jitter.emplace(k.width, k.height, noise.jitter_cell_px, noise.seed);

  const Vector3d col_x = pose.rotation.col(0) / k.focal_px;
  const Vector3d col_y = pose.rotation.col(1) / k.focal_px;
  const Vector3d col_z = pose.rotation.col(2);
  const double rel_u = rel.dot(u_axis);
  const double rel_w = rel.dot(w_axis);
  const double half_w = 0.5 * plane.width_mm;
  const double half_h = 0.5 * plane.height_mm;

  // Ray components are affine in x along a row; only image backdrops need the
  // full direction vector.
  const bool flat_backdrop = scene.background.placement == scene::BackgroundPlacement::Textureless ||
                             scene.background.image.empty();
  const double mist_radius = std::hypot(
      std::max(scene.mist.azimuth_arm_end.norm(), scene.mist.elevation_arm_end.norm()), 0.5 * scene.mist.arm_width_mm);
  const double n_x = n.dot(col_x), u_x = u_axis.dot(col_x), w_x = w_axis.dot(col_x);
  std::array<double, 3> bg{};
  std::array<double, 3> flat_off{}, flat_on{};
  flat_off.fill(scene.background.level);
  flat_on.fill(gain * scene.background.level);
  for (int y = 0; y < k.height; ++y) {
    const Vector3d row_dir = col_z + (y + 0.5 - k.cy) * col_y;
    const double n_row = n.dot(row_dir), u_row = u_axis.dot(row_dir), w_row = w_axis.dot(row_dir);
    for (int x = 0; x < k.width; ++x) {
      const double xo = x + 0.5 - k.cx;
      std::uint8_t* out = frame.image.pixel(x, y);
      const double denom = n_row + xo * n_x;
      bool on_plate = false;
      double depth = 0.0;
      Vector2d q;
      if (denom < -1e-12) {
        depth = -h / denom;
        q = Vector2d(rel_u + depth * (u_row + xo * u_x), rel_w + depth * (w_row + xo * w_x));
        on_plate = std::abs(q.x()) <= half_w && std::abs(q.y()) <= half_h;
      }
      if (!on_plate) {
        if (flat_backdrop) {
          bg = flat_off;
        } else {
          backdrop.sample(pose.position, row_dir + xo * col_x, -1.0, 1.0, bg);
        }
        for (int c = 0; c < channels; ++c) out[c] = to_u8(bg[c]);
        continue;
      }

      if (flat_backdrop) {
        bg = flat_on;
      } else if (reflected) {
        const Vector3d d = row_dir + xo * col_x;
        const Vector3d hit = pose.position + depth * d;
        const Vector3d refl = d - 2.0 * d.dot(n) * n;
        backdrop.sample(hit, refl, +1.0, gain, bg);
      } else {
        backdrop.sample(pose.position, row_dir + xo * col_x, -1.0, gain, bg);
      }

      // The cross lies inside a disk of radius mist_radius, so points farther
      // out than the jitter reach cannot be mist.
      const Vector2d from_mist = q - scene.mist.center_on_plane;
      const double reach = mist_radius + (jitter_cap + 1.0) * depth / k.focal_px;
      if (from_mist.squaredNorm() > reach * reach) {
        for (int c = 0; c < channels; ++c) out[c] = to_u8(bg[c]);
        continue;
      }
      const double sd_px = scene.mist.signed_distance(q) * k.focal_px / depth;
      const bool truth = sd_px > 0.0 && visibility > 0.0;
      bool apparent = sd_px > 0.0;
      if (jitter && std::abs(sd_px) <= jitter_cap) {
        const double j = std::clamp(sigma * jitter->at(x + 0.5, y + 0.5), -jitter_cap, jitter_cap);
        apparent = sd_px + j > 0.0;
      }
      if (apparent && noise.dropout_rate > 0.0 && pixel_uniform(noise.seed, x, y) < noise.dropout_rate) {
        apparent = false;
      }
      if (truth) frame.truth_mask.set(x, y);
      if (apparent && visibility > 0.0) {
        for (int c = 0; c < channels; ++c) out[c] = to_u8((1.0 - visibility) * bg[c] + visibility * mist_gray);
      } else {
        for (int c = 0; c < channels; ++c) out[c] = to_u8(bg[c]);
      }
    }
  }
  return frame;
}

PixelRect seed_rect_around(const Vector2d& center, int size, int image_width, int image_height) {
  require(size > 0, "seed size must be positive");
  const int x0 = std::clamp(static_cast<int>(std::floor(center.x() - 0.5 * size + 0.5)), 0, image_width - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(center.y() - 0.5 * size + 0.5)), 0, image_height - 1);
  const int x1 = std::clamp(x0 + size, 1, image_width);
  const int y1 = std::clamp(y0 + size, 1, image_height);
  return {x0, y0, x1 - x0, y1 - y0};
}

namespace {

using Colour = std::array<double, 3>;

Colour channel_median(const Image& img, const std::vector<std::pair<int, int>>& pixels) {
  Colour out{};
  for (int c = 0; c < img.channels(); ++c) {
    std::array<std::size_t, 256> hist{};
    for (const auto& [x, y] : pixels) ++hist[img.at(x, y, c)];
    const std::size_t half = (pixels.size() + 1) / 2;
    std::size_t seen = 0;
    for (int v = 0; v < 256; ++v) {
      seen += hist[v];
      if (seen >= half) {
        out[c] = v;
        break;
      }
    }
  }
  return out;
}

double colour_distance(const std::uint8_t* p, const Colour& m, int channels) {
  double s = 0.0;
  for (int c = 0; c < channels; ++c) {
    const double d = p[c] - m[c];
    s += d * d;
  }
  return std::sqrt(s);
}

double local_luma_std(const Image& img, int x, int y) {
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = x + dx, yy = y + dy;
      if (xx < 0 || yy < 0 || xx >= img.width() || yy >= img.height()) continue;
      const double v = luma(img, xx, yy);
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, sq / n - mean * mean));
}

}  // namespace

Mask extract_misted_area(const RenderedFrame& frame, const PixelRect& seed_rect,
                         const SegmenterOptions& options) {
  const Image& img = frame.image;
  require(!img.empty(), "frame has no image");
  require(seed_rect.width > 0 && seed_rect.height > 0 && seed_rect.x >= 0 && seed_rect.y >= 0 &&
              seed_rect.x + seed_rect.width <= img.width() && seed_rect.y + seed_rect.height <= img.height(),
          "seed rectangle must lie within the image");
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();

  std::vector<std::pair<int, int>> seed_pixels;
  seed_pixels.reserve(static_cast<std::size_t>(seed_rect.width) * seed_rect.height);
  for (int y = seed_rect.y; y < seed_rect.y + seed_rect.height; ++y)
    for (int x = seed_rect.x; x < seed_rect.x + seed_rect.width; ++x) seed_pixels.emplace_back(x, y);

  std::vector<std::pair<int, int>> border;
  border.reserve(2 * (w + h));
  for (int x = 0; x < w; ++x) {
    border.emplace_back(x, 0);
    if (h > 1) border.emplace_back(x, h - 1);
  }
  for (int y = 1; y + 1 < h; ++y) {
    border.emplace_back(0, y);
    if (w > 1) border.emplace_back(w - 1, y);
  }

  const Colour fg = channel_median(img, seed_pixels);
  const Colour bg = channel_median(img, border);
  double contrast2 = 0.0;
  for (int c = 0; c < ch; ++c) contrast2 += (fg[c] - bg[c]) * (fg[c] - bg[c]);
  const double contrast = std::sqrt(contrast2);
  if (contrast < options.min_contrast) {
    throw Error(ErrorKind::NoForeground, "seed region does not stand out from the border");
  }
  const double tight = options.tight_fraction * contrast;

  auto qualifies = [&](int x, int y) {
    const std::uint8_t* p = img.pixel(x, y);
    const double df = colour_distance(p, fg, ch);
    if (df >= colour_distance(p, bg, ch)) return false;
    return df <= tight || local_luma_std(img, x, y) <= options.max_local_std;
  };

  Mask mask(w, h);
  std::vector<std::uint8_t> visited(mask.pixel_count(), 0);
  std::vector<int> stack;
  for (const auto& [x, y] : seed_pixels) {
    const int idx = y * w + x;
    visited[idx] = 1;
    if (qualifies(x, y)) {
      mask.set(x, y);
      stack.push_back(idx);
    }
  }
  if (stack.empty()) throw Error(ErrorKind::NoForeground, "no qualifying pixel inside the seed rectangle");

  constexpr int dx[4] = {1, -1, 0, 0};
  constexpr int dy[4] = {0, 0, 1, -1};
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const int x = idx % w;
    const int y = idx / w;
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k];
      const int ny = y + dy[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const int nidx = ny * w + nx;
      if (visited[nidx]) continue;
      visited[nidx] = 1;
      if (qualifies(nx, ny)) {
        mask.set(nx, ny);
        stack.push_back(nidx);
      }
    }
  }
  return mask;
}

namespace {

bool inside(const Mask& mask, const Vector2d& p) {
  return mask.test(static_cast<int>(std::floor(p.x())), static_cast<int>(std::floor(p.y())));
}

// Largest t >= 0 keeping origin + t * dir inside [0, w] x [0, h].
double exit_parameter(const Vector2d& origin, const Vector2d& dir, int w, int h) {
  double t = std::numeric_limits<double>::infinity();
  if (dir.x() > 0) t = std::min(t, (w - origin.x()) / dir.x());
  if (dir.x() < 0) t = std::min(t, -origin.x() / dir.x());
  if (dir.y() > 0) t = std::min(t, (h - origin.y()) / dir.y());
  if (dir.y() < 0) t = std::min(t, -origin.y() / dir.y());
  return std::max(t, 0.0);
}

// Distance from origin to the farthest boundary crossing along dir, or -1
// when the ray never enters the mask.
double extreme_crossing(const Mask& mask, const Vector2d& origin, const Vector2d& dir) {
  constexpr double kStep = 0.25;
  const double t_max = exit_parameter(origin, dir, mask.width(), mask.height());
  double t_out = t_max;
  for (double t = t_max - 1e-9; t >= 0.0; t -= kStep) {
    if (inside(mask, origin + t * dir)) {
      double lo = t, hi = std::min(t + kStep, t_out);
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (inside(mask, origin + mid * dir) ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    t_out = t;
  }
  return inside(mask, origin) ? 0.0 : -1.0;
}

}  // namespace

double chord_length_px(const Mask& mask, const Vector2d& origin, const Vector2d& direction) {
  require(direction.norm() > 0.0, "chord direction must be non-zero");
  const Vector2d dir = direction.normalized();
  const double forward = extreme_crossing(mask, origin, dir);
  const double backward = extreme_crossing(mask, origin, -dir);
  if (forward < 0.0 && backward < 0.0) return 0.0;
  if (forward < 0.0 || backward < 0.0) {
    // The line misses the mask on one side of the origin; measure between the
    // two crossings on the side it does hit.
    const Vector2d d = forward >= 0.0 ? dir : Vector2d(-dir);
    const double far = std::max(forward, backward);
    double t = 0.0;
    while (t < far && !inside(mask, origin + t * d)) t += 0.25;
    double lo = std::max(0.0, t - 0.25), hi = t;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (inside(mask, origin + mid * d) ? hi : lo) = mid;
    }
    return far - 0.5 * (lo + hi);
  }
  return forward + backward;
}

std::vector<Vector2d> outer_contour(const Mask& mask) {
  int sx = -1, sy = -1;
  for (int y = 0; y < mask.height() && sx < 0; ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.get(x, y)) {
        sx = x, sy = y;
        break;
      }
    }
  }
  if (sx < 0) return {};

  // Crack following on the pixel-corner lattice with the region on the right
  // (image coordinates, y down). Diagonal-only contacts are not followed, so
  // the traced region is the 4-connected component.
  struct Dir {
    int x, y;
  };
  auto left_of = [](Dir d) { return Dir{d.y, -d.x}; };
  auto right_of = [](Dir d) { return Dir{-d.y, d.x}; };
  auto pixel_set = [&](double cx, double cy) {
    return mask.test(static_cast<int>(std::floor(cx)), static_cast<int>(std::floor(cy)));
  };
  // Pixels to the left and right of the edge leaving vertex (vx, vy) along d.
  auto ahead = [&](int vx, int vy, Dir d, bool left) {
    const double mx = vx + 0.5 * d.x, my = vy + 0.5 * d.y;
    const Dir side = left ? left_of(d) : right_of(d);
    return pixel_set(mx + 0.5 * side.x, my + 0.5 * side.y);
  };

  std::vector<Vector2d> poly;
  const int start_x = sx, start_y = sy;
  const Dir start_dir{1, 0};
  int vx = start_x, vy = start_y;
  Dir d = start_dir;
  poly.emplace_back(vx, vy);
  const std::size_t guard = 4 * (mask.pixel_count() + 4);
  for (std::size_t step = 0; step < guard; ++step) {
    vx += d.x;
    vy += d.y;
    Dir next;
    const bool ar = ahead(vx, vy, d, false);
    const bool al = ahead(vx, vy, d, true);
    if (ar && al) {
      next = left_of(d);
    } else if (ar) {
      next = d;
    } else {
      next = right_of(d);
    }
    if (vx == start_x && vy == start_y && next.x == start_dir.x && next.y == start_dir.y) break;
    if (next.x != d.x || next.y != d.y) poly.emplace_back(vx, vy);
    d = next;
  }
  return poly;
}

namespace {

struct ArmLine {
  Vector2d point;
  Vector2d dir;
};

// Perspective shifts the centroid off the arm crossing and skews the arms
// away from perpendicular, so each arm gets its own line. The across-axis
// histogram peaks on the arm; a least-squares line through that band gives
// its offset and direction.
ArmLine fit_arm(const std::vector<Vector2d>& pts, ArmLine line) {
  for (int iter = 0; iter < 3; ++iter) {
    const Vector2d b(-line.dir.y(), line.dir.x());
    std::vector<double> t_of(pts.size());
    double t_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t_of[i] = (pts[i] - line.point).dot(b);
      t_min = std::min(t_min, t_of[i]);
    }
    const double base = std::floor(t_min);
    std::vector<std::size_t> hist;
    for (const double t : t_of) {
      const auto bin = static_cast<std::size_t>(t - base);
      if (bin >= hist.size()) hist.resize(bin + 1, 0);
      ++hist[bin];
    }
    const std::size_t peak = static_cast<std::size_t>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    const std::size_t half = (hist[peak] + 1) / 2;
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && hist[lo - 1] >= half) --lo;
    while (hi + 1 < hist.size() && hist[hi + 1] >= half) ++hi;
    const double t_lo = base + static_cast<double>(lo), t_hi = base + static_cast<double>(hi + 1);

    double n = 0.0, ss = 0.0, st = 0.0, sss = 0.0, sst = 0.0;
    for (const Vector2d& p : pts) {
      const Vector2d d = p - line.point;
      const double t = d.dot(b);
      if (t < t_lo || t > t_hi) continue;
      const double u = d.dot(line.dir);
      n += 1.0, ss += u, st += t, sss += u * u, sst += u * t;
    }
    const double var = n * sss - ss * ss;
    if (n < 2.0 || var <= 1e-9 * n * n) break;
    const double slope = (n * sst - ss * st) / var;
    const double offset = (st - slope * ss) / n;
    line.point += offset * b;
    line.dir = (line.dir + slope * b).normalized();
  }
  return line;
}

Vector2d intersect(const ArmLine& a, const ArmLine& b) {
  const double den = a.dir.x() * b.dir.y() - a.dir.y() * b.dir.x();
  if (std::abs(den) < 1e-9) return a.point;
  const Vector2d d = b.point - a.point;
  const double t = (d.x() * b.dir.y() - d.y() * b.dir.x()) / den;
  return a.point + t * a.dir;
}

}  // namespace

MistObservation measure_axes(const Mask& mask, const CameraView& view, double plane_distance_mm,
                             const MeasureOptions& options) {
  require(plane_distance_mm > 0.0, "plane distance must be positive");
  require(mask.width() == view.intrinsics.width && mask.height() == view.intrinsics.height,
          "mask and camera resolution differ");
  MistObservation obs;
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.get(x, y)) continue;
      sx += x + 0.5;
      sy += y + 0.5;
      ++n;
    }
  }
  obs.area_px = n;
  if (n < std::max<std::size_t>(options.min_area_px, 1)) {
    throw Error(ErrorKind::MaskTooSmall, "mask area " + std::to_string(n) + " px is below " +
                                             std::to_string(options.min_area_px) + " px");
  }
  const Vector2d c(sx / n, sy / n);
  std::vector<Vector2d> pts;
  pts.reserve(n);
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  std::complex<double> m4(0.0, 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.get(x, y)) continue;
      pts.emplace_back(x + 0.5, y + 0.5);
      const double dx = x + 0.5 - c.x();
      const double dy = y + 0.5 - c.y();
      cxx += dx * dx;
      cyy += dy * dy;
      cxy += dx * dy;
      const std::complex<double> z(dx, dy);
      const std::complex<double> z2 = z * z;
      m4 += z2 * z2;
    }
  }
  cxx /= n, cyy /= n, cxy /= n;
  m4 /= static_cast<double>(n);

  const double half_diff = 0.5 * (cxx - cyy);
  const double gap = 2.0 * std::sqrt(half_diff * half_diff + cxy * cxy);
  double angle = 0.0;
  if (gap > options.isotropy_tolerance * (cxx + cyy)) {
    angle = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
  } else if (std::abs(m4) > 1e-12 * (cxx + cyy) * (cxx + cyy)) {
    // Near-isotropic second moments: a plus-shaped cross still has a
    // four-fold moment aligned with its arms.
    angle = 0.25 * std::arg(m4);
  }
  obs.centroid = c;
  obs.major_axis = Vector2d(std::cos(angle), std::sin(angle));
  obs.minor_axis = Vector2d(-obs.major_axis.y(), obs.major_axis.x());
  const bool major_is_horizontal = std::abs(obs.major_axis.x()) >= std::abs(obs.minor_axis.x());
  const ArmLine az = fit_arm(pts, {c, major_is_horizontal ? obs.major_axis : obs.minor_axis});
  const ArmLine el = fit_arm(pts, {c, major_is_horizontal ? obs.minor_axis : obs.major_axis});
  obs.azimuth_axis = az.dir;
  obs.elevation_axis = el.dir;
  obs.crossing = intersect(az, el);

  obs.azimuth_chord_px = chord_length_px(mask, obs.crossing, obs.azimuth_axis);
  obs.elevation_chord_px = chord_length_px(mask, obs.crossing, obs.elevation_axis);
  const double mm_per_px = plane_distance_mm / view.intrinsics.focal_px;
  obs.L_azimuth_mm = obs.azimuth_chord_px * mm_per_px;
  obs.L_elevation_mm = obs.elevation_chord_px * mm_per_px;
  obs.contour = outer_contour(mask);
  return obs;
}

double f_score(const Mask& predicted, const Mask& truth) {
  require(predicted.width() == truth.width() && predicted.height() == truth.height(),
          "masks must share dimensions");
  std::size_t tp = 0, fp = 0, fn = 0;
  const auto& p = predicted.bits();
  const auto& t = truth.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && t[i]) ++tp;
    else if (p[i]) ++fp;
    else if (t[i]) ++fn;
  }
  if (tp + fn == 0) throw Error(ErrorKind::EmptyTruth, "truth mask has no positive pixels");
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace mistnormal::imaging
