#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ocpamr/errors.hpp"

namespace ocpamr {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Conforming 2D simplicial triangulation.
///
/// Element vertices are stored counterclockwise. Local edge k of an element is
/// the edge opposite local vertex k, i.e. it connects vertices (k+1)%3 and
/// (k+2)%3. refinement_edge[t] is the local edge that newest-vertex bisection
/// splits when element t is refined.
struct Mesh {
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> elements;
    std::vector<char> boundary_vertex; ///< 1 iff the vertex is incident to a boundary side
    std::vector<int> refinement_edge;
    std::uint64_t id = 0; ///< distinct per mesh generation; FeFunctions are bound to it

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
};

/// Interior (inter-element) sides of a mesh with their adjacency.
struct SideTable {
    std::vector<std::array<int, 2>> sides;     ///< vertex pairs, lower index first
    std::vector<std::array<int, 2>> neighbors; ///< element pair sharing the side
    std::vector<std::vector<int>> element_sides; ///< per element: indices into sides
    std::vector<double> side_length;
};

/// Builds a mesh from raw vertex/element data: computes boundary flags from
/// side multiplicity and assigns each element's refinement edge to its longest
/// edge (ties broken by the lowest opposite-vertex index).
Mesh make_mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> elements);

/// The L-shaped domain (-1,1)^2 \ [0,1)x(-1,0] meshed by 12 congruent right
/// triangles: each of the three unit squares is split by connecting its center
/// to its four corners.
Mesh initial_lshape_mesh();

/// The unit square split into 4 congruent triangles through its center.
Mesh unit_square_mesh();

/// The unit square as an n-by-n grid of cells, each split by the diagonal of
/// positive slope.
Mesh structured_square_mesh(int cells_per_side);

/// Newest-vertex bisection of the marked elements plus conforming closure.
/// Every marked element is bisected at least once; no hanging nodes remain.
Mesh refine(const Mesh& mesh, const std::vector<int>& marked);

/// Collects all interior sides. Throws StructuralError if a side is shared by
/// more than two elements, a shared side is traversed twice in the same
/// direction, or an element is degenerate.
SideTable build_side_table(const Mesh& mesh);

/// Elements sharing at least one interior side with element t, including t
/// itself whenever t has an interior side. Sorted ascending.
std::vector<int> element_patch(const Mesh& mesh, const SideTable& sides, int t);

double element_area(const Mesh& mesh, int t);

/// h_T: the longest edge, which for a triangle equals its diameter.
double element_diameter(const Mesh& mesh, int t);

double total_area(const Mesh& mesh);

/// Smallest interior angle over all elements, in degrees.
double min_angle_deg(const Mesh& mesh);

} // namespace ocpamr
