#include "zipr/generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace zipr {

namespace {

constexpr double kPi = 3.14159265358979323846;

void add_quad(std::vector<Tri>& f, int a, int b, int c, int d) {
  f.push_back({a, b, c});
  f.push_back({a, c, d});
}

struct SphereGrid {
  int n_lon, n_bands;
  int north() const { return 0; }
  int south() const { return 1 + n_lon * (n_bands - 1); }
  int at(int ring, int k) const { return 1 + (ring - 1) * n_lon + ((k % n_lon) + n_lon) % n_lon; }
};

std::vector<Tri> sphere_faces(const SphereGrid& g) {
  std::vector<Tri> f;
  for (int k = 0; k < g.n_lon; ++k) f.push_back({g.north(), g.at(1, k), g.at(1, k + 1)});
  for (int i = 1; i + 1 < g.n_bands; ++i)
    for (int k = 0; k < g.n_lon; ++k) add_quad(f, g.at(i, k), g.at(i + 1, k), g.at(i + 1, k + 1), g.at(i, k + 1));
  const int last = g.n_bands - 1;
  for (int k = 0; k < g.n_lon; ++k) f.push_back({g.at(last, k), g.south(), g.at(last, k + 1)});
  return f;
}

// Direction for (polar angle, azimuth).
Vec3 direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

template <class RadiusFn>
std::vector<Vec3> sphere_positions(const SphereGrid& g, RadiusFn radius) {
  std::vector<Vec3> p(g.south() + 1);
  p[g.north()] = radius(Vec3(0, 0, 1)) * Vec3(0, 0, 1);
  p[g.south()] = radius(Vec3(0, 0, -1)) * Vec3(0, 0, -1);
  for (int i = 1; i < g.n_bands; ++i)
    for (int k = 0; k < g.n_lon; ++k) {
      const Vec3 d = direction(kPi * i / g.n_bands, 2.0 * kPi * k / g.n_lon);
      p[g.at(i, k)] = radius(d) * d;
    }
  return p;
}

std::vector<int> meridian(const SphereGrid& g, int k) {
  std::vector<int> m{g.north()};
  for (int i = 1; i < g.n_bands; ++i) m.push_back(g.at(i, k));
  m.push_back(g.south());
  return m;
}

}  // namespace

SurfaceMesh make_tube(int n_around, int n_height, double radius, double height, double noise, unsigned seed) {
  if (n_around < 3 || n_height < 1) throw Error("bad_argument", "tube needs n_around >= 3 and n_height >= 1");
  std::vector<Vec3> p;
  for (int j = 0; j <= n_height; ++j)
    for (int i = 0; i < n_around; ++i) {
      const double a = 2.0 * kPi * i / n_around;
      p.emplace_back(radius * std::cos(a), radius * std::sin(a), height * j / n_height);
    }
  if (noise > 0.0) {
    const double h = std::min(2.0 * kPi * radius / n_around, height / n_height);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Vec3& x : p) {
      const double dx = u(rng), dy = u(rng), dz = u(rng);
      x += noise * h * Vec3(dx, dy, dz);
    }
  }
  std::vector<Tri> f;
  for (int j = 0; j < n_height; ++j)
    for (int i = 0; i < n_around; ++i) {
      const int i1 = (i + 1) % n_around;
      add_quad(f, j * n_around + i, j * n_around + i1, (j + 1) * n_around + i1, (j + 1) * n_around + i);
    }
  return SurfaceMesh(std::move(p), std::move(f));
}

SurfaceMesh make_uv_sphere(int n_lon, int n_bands, double radius) {
  if (n_lon < 3 || n_bands < 2) throw Error("bad_argument", "sphere needs n_lon >= 3 and n_bands >= 2");
  const SphereGrid g{n_lon, n_bands};
  return SurfaceMesh(sphere_positions(g, [&](const Vec3&) { return radius; }), sphere_faces(g));
}

SurfaceMesh make_torus(int n_major, int n_minor, double R, double r) {
  std::vector<Vec3> p;
  std::vector<Tri> f;
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j) {
      const double u = 2.0 * kPi * i / n_major, v = 2.0 * kPi * j / n_minor;
      p.emplace_back((R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u), r * std::sin(v));
    }
  auto id = [&](int i, int j) { return (i % n_major) * n_minor + (j % n_minor); };
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j) add_quad(f, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
  return SurfaceMesh(std::move(p), std::move(f));
}

SurfaceMesh make_single_triangle() { return SurfaceMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}); }

SurfaceMesh make_tetrahedron() {
  return SurfaceMesh({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}, {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}});
}

int t_shape_tip(int n_lon, int n_bands, int arm) {
  const SphereGrid g{n_lon, n_bands};
  static const int eighths[3] = {0, 4, 6};
  return g.at(n_bands / 2, eighths[arm] * n_lon / 8);
}

Fixture make_t_shape(int n_lon, int n_bands) {
  if (n_lon % 8 != 0 || n_bands % 2 != 0 || n_bands < 4)
    throw Error("bad_argument", "T shape needs n_lon divisible by 8 and even n_bands >= 4");
  const SphereGrid g{n_lon, n_bands};
  const Vec3 axes[3] = {{1, 0, 0}, {-1, 0, 0}, {0, -1, 0}};
  auto radius = [&](const Vec3& d) {
    double r = 1.0;
    for (const Vec3& a : axes) {
      const double ang = std::acos(std::clamp(d.dot(a), -1.0, 1.0));
      r += 1.2 * std::exp(-ang * ang / 0.35);
    }
    return r;
  };
  Fixture fx{SurfaceMesh(sphere_positions(g, radius), sphere_faces(g)), {}};

  std::vector<int> a = meridian(g, n_lon / 4), b = meridian(g, 5 * n_lon / 8);
  std::vector<int> loop = a;
  loop.insert(loop.end(), b.rbegin() + 1, b.rend());
  fx.seg.loops = {loop, meridian(g, 7 * n_lon / 8)};
  for (int arm = 0; arm < 3; ++arm)
    fx.seg.open_sites.push_back({OpenSite::Type::Hole, {t_shape_tip(n_lon, n_bands, arm)}});
  return fx;
}

Fixture make_tube_chain(int n_around, int n_height, int n_parts, double radius, double height, double noise) {
  if (n_parts < 1 || n_height % n_parts != 0) throw Error("bad_argument", "n_height must be divisible by n_parts");
  Fixture fx{make_tube(n_around, n_height, radius, height, noise), {}};
  for (int c = 1; c < n_parts; ++c) {
    const int j = c * n_height / n_parts;
    std::vector<int> ring;
    for (int i = 0; i <= n_around; ++i) ring.push_back(j * n_around + i % n_around);
    fx.seg.loops.push_back(ring);
  }
  return fx;
}

Fixture make_three_chain(int n_lon, int n_bands) {
  if (n_lon < 12 || n_bands < 12) throw Error("bad_argument", "three-chain needs n_lon, n_bands >= 12");
  const SphereGrid g{n_lon, n_bands};
  Fixture fx{SurfaceMesh(sphere_positions(g, [](const Vec3&) { return 1.0; }), sphere_faces(g)), {}};
  // Two lat-long rectangles touching at one corner; the rest of the sphere
  // is the middle part.
  const int r0 = n_bands / 5, r1 = n_bands / 2, r2 = n_bands - n_bands / 5;
  const int k0 = n_lon / 12, k1 = n_lon / 3, k2 = 7 * n_lon / 12;
  auto rectangle = [&](int ra, int rb, int ka, int kb) {
    std::vector<int> loop;
    for (int k = ka; k < kb; ++k) loop.push_back(g.at(ra, k));
    for (int r = ra; r < rb; ++r) loop.push_back(g.at(r, kb));
    for (int k = kb; k > ka; --k) loop.push_back(g.at(rb, k));
    for (int r = rb; r >= ra; --r) loop.push_back(g.at(r, ka));
    return loop;
  };
  fx.seg.loops = {rectangle(r0, r1, k0, k1), rectangle(r1, r2, k1, k2)};
  fx.seg.open_sites = {{OpenSite::Type::Hole, {g.at((r0 + r1) / 2, (k0 + k1) / 2)}},
                       {OpenSite::Type::Hole, {g.at((r1 + r2) / 2, (k1 + k2) / 2)}},
                       {OpenSite::Type::Hole, {g.at(n_bands / 2, 5 * n_lon / 6)}}};
  return fx;
}

SurfaceMesh make_bent_tube(int n_around, int n_length, double tube_radius) {
  // Centerline: three quarters of a circle lifted into a wave.
  auto center = [](double t) {
    return Vec3(3.0 * std::cos(t), 3.0 * std::sin(t), 0.8 * std::sin(2.0 * t));
  };
  const double t0 = 0.0, t1 = 1.5 * kPi;
  std::vector<Vec3> c(n_length + 1), tan(n_length + 1);
  for (int j = 0; j <= n_length; ++j) {
    const double t = t0 + (t1 - t0) * j / n_length;
    c[j] = center(t);
    tan[j] = (center(t + 1e-5) - center(t - 1e-5)).normalized();
  }
  Vec3 nrm = tan[0].cross(Vec3(0, 0, 1)).normalized();
  std::vector<Vec3> p;
  for (int j = 0; j <= n_length; ++j) {
    nrm = (nrm - nrm.dot(tan[j]) * tan[j]).normalized();
    const Vec3 bin = tan[j].cross(nrm);
    for (int i = 0; i < n_around; ++i) {
      const double a = 2.0 * kPi * i / n_around;
      p.push_back(c[j] + tube_radius * (std::cos(a) * nrm + std::sin(a) * bin));
    }
  }
  std::vector<Tri> f;
  for (int j = 0; j < n_length; ++j)
    for (int i = 0; i < n_around; ++i) {
      const int i1 = (i + 1) % n_around;
      add_quad(f, j * n_around + i, j * n_around + i1, (j + 1) * n_around + i1, (j + 1) * n_around + i);
    }
  return SurfaceMesh(std::move(p), std::move(f));
}

Fixture make_blob(int n_lon, int n_bands, double diameter) {
  const SphereGrid g{n_lon, n_bands};
  const double r0 = 0.5 * diameter;
  auto radius = [&](const Vec3& d) {
    const double lump = 0.10 * d.x() * d.y() + 0.08 * std::sin(3.0 * d.z() + 1.0) * d.x() + 0.12 * d.z() * d.z();
    return r0 * (0.9 + lump);
  };
  Fixture fx{SurfaceMesh(sphere_positions(g, radius), sphere_faces(g)), {}};
  fx.seg.open_sites = {{OpenSite::Type::Hole, {g.north()}}, {OpenSite::Type::Hole, {g.south()}}};
  return fx;
}

std::vector<std::string> fixture_names() {
  return {"cylinder", "noisy-tube", "two-part", "three-chain", "t-shape", "t-shape-30k", "bent-tube", "blob"};
}

Fixture make_fixture(const std::string& name) {
  if (name == "cylinder") return {make_tube(40, 25, 1.0, 3.0), {}};
  if (name == "noisy-tube") return {make_tube(20, 20, 1.0, 3.0, 0.15, 7), {}};
  if (name == "two-part") return make_tube_chain(24, 24, 2, 1.0, 4.0, 0.1);
  if (name == "three-chain") return make_three_chain(24, 20);
  if (name == "t-shape") return make_t_shape(32, 24);
  if (name == "t-shape-30k") return make_t_shape(128, 118);
  if (name == "bent-tube") return {make_bent_tube(24, 120, 0.6), {}};
  if (name == "blob") return make_blob(64, 40, 250.0);
  throw Error("bad_argument", "unknown fixture '" + name + "'");
}

}  // namespace zipr
