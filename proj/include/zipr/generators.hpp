#pragma once

#include "zipr/decomposition.hpp"
#include "zipr/mesh.hpp"

namespace zipr {

// Procedural test meshes. All are outward oriented and deterministic.

struct Fixture {
  SurfaceMesh mesh;
  Segmentation seg;
};

// Open tube around the z axis: n_height rings of quads, each split in two.
// Vertex (ring j, index i) is j*n_around + i. noise > 0 displaces every vertex
// by up to noise * (mean edge length) along each axis.
SurfaceMesh make_tube(int n_around, int n_height, double radius, double height, double noise = 0.0,
                      unsigned seed = 1);

// Pole vertices 0 and last; n_bands latitude bands.
SurfaceMesh make_uv_sphere(int n_lon, int n_bands, double radius = 1.0);
SurfaceMesh make_torus(int n_major, int n_minor, double major_radius, double minor_radius);
SurfaceMesh make_single_triangle();
SurfaceMesh make_tetrahedron();

// Sphere with three arms (T shape) at azimuth 0, pi and 3pi/2. The three
// lunes between meridians pi/2, 5pi/4, 7pi/4 are the parts, each opened by a
// hole at its arm tip. n_lon must be a multiple of 8 and n_bands even.
Fixture make_t_shape(int n_lon, int n_bands);
// Vertex id of an arm tip (arm 0, 1, 2 at azimuth 0, pi, 3pi/2).
int t_shape_tip(int n_lon, int n_bands, int arm);

// Tube split into n_parts stacked parts by ring loops.
Fixture make_tube_chain(int n_around, int n_height, int n_parts, double radius, double height,
                        double noise = 0.0);

// Unit sphere in three parts A-B-C: two rectangles A and C meeting at one
// corner vertex, and the remainder B whose transition loop has two arcs.
// Each part is opened by a hole.
Fixture make_three_chain(int n_lon, int n_bands);

// Tube swept along a bent space curve.
SurfaceMesh make_bent_tube(int n_around, int n_length, double tube_radius);

// Lumpy closed blob opened by holes at both poles; one part. Size in mm.
Fixture make_blob(int n_lon, int n_bands, double diameter);

Fixture make_fixture(const std::string& name);
std::vector<std::string> fixture_names();

}  // namespace zipr
