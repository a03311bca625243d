#include "ocpamr/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace ocpamr {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Local edge k of an element runs from vertex (k+1)%3 to (k+2)%3.
std::array<int, 2> local_edge(const std::array<int, 3>& tri, int k) {
    return {tri[(k + 1) % 3], tri[(k + 2) % 3]};
}

double signed_area(const Point& a, const Point& b, const Point& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double edge_length(const Point& a, const Point& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

void check_positive_areas(const Mesh& mesh) {
    for (int t = 0; t < mesh.element_count(); ++t) {
        if (element_area(mesh, t) <= 0.0) {
            throw StructuralError("mesh: element " + std::to_string(t) +
                                  " has nonpositive signed area");
        }
    }
}

std::vector<char> boundary_flags_from_sides(const std::vector<Point>& vertices,
                                            const std::vector<std::array<int, 3>>& elements) {
    std::unordered_map<std::uint64_t, int> multiplicity;
    for (const auto& tri : elements) {
        for (int k = 0; k < 3; ++k) {
            const auto e = local_edge(tri, k);
            ++multiplicity[edge_key(e[0], e[1])];
        }
    }
    std::vector<char> flags(vertices.size(), 0);
    for (const auto& tri : elements) {
        for (int k = 0; k < 3; ++k) {
            const auto e = local_edge(tri, k);
            if (multiplicity.at(edge_key(e[0], e[1])) == 1) {
                flags[e[0]] = 1;
                flags[e[1]] = 1;
            }
        }
    }
    return flags;
}

int longest_edge_index(const Mesh& mesh, int t) {
    const auto& tri = mesh.elements[t];
    int best = 0;
    double best_len = -1.0;
    int best_opposite = -1;
    for (int k = 0; k < 3; ++k) {
        const auto e = local_edge(tri, k);
        const double len = edge_length(mesh.vertices[e[0]], mesh.vertices[e[1]]);
        const bool longer = len > best_len + 1e-12;
        const bool tie_wins = std::abs(len - best_len) <= 1e-12 && tri[k] < best_opposite;
        if (longer || tie_wins) {
            best = k;
            best_len = len;
            best_opposite = tri[k];
        }
    }
    return best;
}

} // namespace

Mesh make_mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> elements) {
    Mesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.elements = std::move(elements);
    for (const auto& tri : mesh.elements) {
        for (int v : tri) {
            if (v < 0 || v >= mesh.vertex_count()) {
                throw InputError("mesh: element vertex index out of range");
            }
        }
    }
    mesh.boundary_vertex = boundary_flags_from_sides(mesh.vertices, mesh.elements);
    mesh.refinement_edge.resize(mesh.elements.size());
    mesh.id = next_mesh_id.fetch_add(1);
    check_positive_areas(mesh);
    for (int t = 0; t < mesh.element_count(); ++t) {
        mesh.refinement_edge[t] = longest_edge_index(mesh, t);
    }
    return mesh;
}

Mesh initial_lshape_mesh() {
    const std::vector<Point> vertices = {
        {-1.0, -1.0}, {0.0, -1.0},              // 0 1
        {-1.0, 0.0},  {0.0, 0.0},  {1.0, 0.0},  // 2 3 4
        {-1.0, 1.0},  {0.0, 1.0},  {1.0, 1.0},  // 5 6 7
        {-0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5},  // square centers 8 9 10
    };
    // Each unit square: center joined to its corners, corners counterclockwise.
    const std::vector<std::array<int, 3>> elements = {
        {8, 0, 1},  {8, 1, 3},  {8, 3, 2},  {8, 2, 0},  // [-1,0] x [-1,0]
        {9, 2, 3},  {9, 3, 6},  {9, 6, 5},  {9, 5, 2},  // [-1,0] x [0,1]
        {10, 3, 4}, {10, 4, 7}, {10, 7, 6}, {10, 6, 3}, // [0,1] x [0,1]
    };
    return make_mesh(vertices, elements);
}

Mesh unit_square_mesh() {
    const std::vector<Point> vertices = {
        {0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {0.5, 0.5},
    };
    const std::vector<std::array<int, 3>> elements = {
        {4, 0, 1}, {4, 1, 2}, {4, 2, 3}, {4, 3, 0},
    };
    return make_mesh(vertices, elements);
}

Mesh structured_square_mesh(int cells_per_side) {
    if (cells_per_side < 1) throw InputError("mesh: cells_per_side must be >= 1");
    const int n = cells_per_side;
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    const auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::array<int, 3>> elements;
    elements.reserve(static_cast<std::size_t>(2) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
            elements.push_back({v00, v10, v11});
            elements.push_back({v00, v11, v01});
        }
    }
    return make_mesh(std::move(vertices), std::move(elements));
}

// Refinement works on the set of bisected edges rather than on element splits:
// first the refinement edges of all marked elements are collected, then the set
// is closed so that any element with a bisected edge also has its refinement
// edge bisected. After closure each element falls into one of four cases
// (0 edges bisected: kept; refinement edge only: 2 children; refinement edge
// plus one or both remaining edges: 3 or 4 children), and rebuilding all
// elements independently yields a conforming mesh because neighbors agree on
// which edges carry a midpoint.
Mesh refine(const Mesh& mesh, const std::vector<int>& marked) {
    for (int t : marked) {
        if (t < 0 || t >= mesh.element_count()) {
            throw InputError("mesh: marked element index " + std::to_string(t) +
                             " out of range");
        }
    }

    std::unordered_set<std::uint64_t> bisected;
    const auto ref_edge_key = [&](int t) {
        const auto e = local_edge(mesh.elements[t], mesh.refinement_edge[t]);
        return edge_key(e[0], e[1]);
    };
    for (int t : marked) bisected.insert(ref_edge_key(t));

    bool changed = !bisected.empty();
    while (changed) {
        changed = false;
        for (int t = 0; t < mesh.element_count(); ++t) {
            const auto rk = ref_edge_key(t);
            if (bisected.count(rk)) continue;
            for (int k = 0; k < 3; ++k) {
                const auto e = local_edge(mesh.elements[t], k);
                if (bisected.count(edge_key(e[0], e[1]))) {
                    bisected.insert(rk);
                    changed = true;
                    break;
                }
            }
        }
    }

    // Midpoints are numbered after the existing vertices, in sorted edge order,
    // so the result does not depend on hash iteration order.
    std::vector<std::uint64_t> edges(bisected.begin(), bisected.end());
    std::sort(edges.begin(), edges.end());
    std::unordered_map<std::uint64_t, int> midpoint;
    Mesh out;
    out.vertices = mesh.vertices;
    for (const auto key : edges) {
        const int a = static_cast<int>(key >> 32);
        const int b = static_cast<int>(key & 0xffffffffu);
        midpoint[key] = out.vertex_count();
        out.vertices.push_back({0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                                0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)});
    }

    const auto emit = [&out](int v0, int v1, int v2, int ref) {
        out.elements.push_back({v0, v1, v2});
        out.refinement_edge.push_back(ref);
    };
    // Children of a bisection are (m, peak, a) and (m, b, peak) for parent
    // (peak, a, b) with refinement edge (a, b) and midpoint m: the new vertex
    // comes first, so the child refinement edge is local edge 0.
    const auto emit_child = [&](int m, int x, int y) {
        const auto it = midpoint.find(edge_key(x, y));
        if (it == midpoint.end()) {
            emit(m, x, y, 0);
        } else {
            emit(it->second, m, x, 0);
            emit(it->second, y, m, 0);
        }
    };
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto& tri = mesh.elements[t];
        const int k = mesh.refinement_edge[t];
        const auto it = midpoint.find(ref_edge_key(t));
        if (it == midpoint.end()) {
            emit(tri[0], tri[1], tri[2], k);
            continue;
        }
        const int peak = tri[k], a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
        const int m = it->second;
        emit_child(m, peak, a);
        emit_child(m, b, peak);
    }

    out.boundary_vertex = boundary_flags_from_sides(out.vertices, out.elements);
    out.id = next_mesh_id.fetch_add(1);
    check_positive_areas(out);
    return out;
}

SideTable build_side_table(const Mesh& mesh) {
    check_positive_areas(mesh);
    struct Incidence {
        int count = 0;
        std::array<int, 2> element{-1, -1};
        int forward = 0; // traversals in (lower vertex -> higher vertex) direction
    };
    std::unordered_map<std::uint64_t, Incidence> edges;
    edges.reserve(mesh.elements.size() * 2);
    for (int t = 0; t < mesh.element_count(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const auto e = local_edge(mesh.elements[t], k);
            auto& inc = edges[edge_key(e[0], e[1])];
            if (inc.count < 2) inc.element[inc.count] = t;
            ++inc.count;
            if (e[0] < e[1]) ++inc.forward;
        }
    }
    for (const auto& [key, inc] : edges) {
        if (inc.count > 2) {
            throw StructuralError("mesh: side shared by more than two elements");
        }
        // A conforming counterclockwise mesh traverses every interior side once
        // in each direction.
        if (inc.count == 2 && inc.forward != 1) {
            throw StructuralError("mesh: interior side traversed twice in the same direction");
        }
    }

    SideTable table;
    table.element_sides.resize(mesh.elements.size());
    // Deterministic side numbering: scan elements in order, adopt a side the
    // first time it appears.
    std::unordered_map<std::uint64_t, int> side_index;
    for (int t = 0; t < mesh.element_count(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const auto e = local_edge(mesh.elements[t], k);
            const auto key = edge_key(e[0], e[1]);
            const auto& inc = edges.at(key);
            if (inc.count != 2) continue;
            auto it = side_index.find(key);
            if (it == side_index.end()) {
                it = side_index.emplace(key, static_cast<int>(table.sides.size())).first;
                const int lo = std::min(e[0], e[1]), hi = std::max(e[0], e[1]);
                table.sides.push_back({lo, hi});
                table.neighbors.push_back(inc.element);
                table.side_length.push_back(
                    edge_length(mesh.vertices[lo], mesh.vertices[hi]));
            }
            table.element_sides[t].push_back(it->second);
        }
    }
    return table;
}

std::vector<int> element_patch(const Mesh& mesh, const SideTable& sides, int t) {
    if (t < 0 || t >= mesh.element_count()) {
        throw InputError("mesh: element index out of range");
    }
    std::vector<int> patch;
    for (int s : sides.element_sides[t]) {
        patch.push_back(sides.neighbors[s][0]);
        patch.push_back(sides.neighbors[s][1]);
    }
    std::sort(patch.begin(), patch.end());
    patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
    return patch;
}

double element_area(const Mesh& mesh, int t) {
    const auto& tri = mesh.elements[t];
    return signed_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
}

double element_diameter(const Mesh& mesh, int t) {
    const auto& tri = mesh.elements[t];
    double h = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto e = local_edge(tri, k);
        h = std::max(h, edge_length(mesh.vertices[e[0]], mesh.vertices[e[1]]));
    }
    return h;
}

double total_area(const Mesh& mesh) {
    double area = 0.0;
    for (int t = 0; t < mesh.element_count(); ++t) area += element_area(mesh, t);
    return area;
}

double min_angle_deg(const Mesh& mesh) {
    double min_angle = 180.0;
    for (const auto& tri : mesh.elements) {
        for (int k = 0; k < 3; ++k) {
            const Point& a = mesh.vertices[tri[k]];
            const Point& b = mesh.vertices[tri[(k + 1) % 3]];
            const Point& c = mesh.vertices[tri[(k + 2) % 3]];
            const double ux = b.x - a.x, uy = b.y - a.y;
            const double vx = c.x - a.x, vy = c.y - a.y;
            const double dot = ux * vx + uy * vy;
            const double cross = ux * vy - uy * vx;
            min_angle = std::min(min_angle, std::atan2(std::abs(cross), dot) * 180.0 / M_PI);
        }
    }
    return min_angle;
}

} // namespace ocpamr
