#pragma once

#include "zipr/mesh.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace zipr {

// ASCII OBJ, triangles only. Texture/normal indices ("f 1/2/3 ...") and
// negative indices are accepted; anything but triangles is rejected.
SurfaceMesh parse_obj(std::istream& in);
SurfaceMesh load_mesh(const std::string& path);

void write_obj(std::ostream& out, const std::vector<Vec3>& positions, const std::vector<Tri>& faces);
void write_obj(const std::string& path, const std::vector<Vec3>& positions, const std::vector<Tri>& faces);
void write_obj(const std::string& path, const SurfaceMesh& mesh);
// Polyline as "v" records plus one "l" record.
void write_polyline_obj(const std::string& path, const std::vector<Vec3>& points);

// printf("%.17g") formatting used by every text artifact.
std::string format_double(double x);

}  // namespace zipr
