#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fracshape/audit.hpp"
#include "fracshape/concentration.hpp"
#include "fracshape/errors.hpp"
#include "fracshape/experiments.hpp"
#include "fracshape/shape.hpp"
#include "fracshape/solvers.hpp"
#include "fracshape/stiffness.hpp"

namespace py = pybind11;
using namespace fracshape;

namespace {

using Cells = std::vector<std::uint8_t>;

DomainMask to_mask(const Grid& g, const Cells& cells) {
    if (static_cast<int>(cells.size()) != g.cell_count())
        throw ParameterError("mask", "length must equal the grid cell count");
    Cells bits(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) bits[i] = cells[i] != 0 ? 1 : 0;
    return DomainMask(g, std::move(bits));
}

GridFunction to_function(const Grid& g, const Eigen::VectorXd& values) {
    if (values.size() != g.cell_count()) throw ParameterError("u", "length must equal the grid cell count");
    return GridFunction(g, values);
}

Point to_point(const std::vector<double>& p) {
    Point out{0.0, 0.0};
    for (std::size_t i = 0; i < std::min<std::size_t>(2, p.size()); ++i) out[i] = p[i];
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Discrete fractional Dirichlet forms, spectra and shape diagnostics";

    // Translators are tried newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<DomainEmptyError>(m, "DomainEmptyError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<Grid>(m, "Grid")
        .def(py::init<int, double, int>(), py::arg("dim"), py::arg("half_width"), py::arg("resolution"))
        .def_property_readonly("dim", &Grid::dim)
        .def_property_readonly("half_width", &Grid::half_width)
        .def_property_readonly("resolution", &Grid::resolution)
        .def_property_readonly("h", &Grid::h)
        .def_property_readonly("cell_count", &Grid::cell_count)
        .def("cell_centers", &Grid::cell_centers)
        .def("__repr__", [](const Grid& g) {
            return "Grid(dim=" + std::to_string(g.dim()) + ", half_width=" + std::to_string(g.half_width()) +
                   ", resolution=" + std::to_string(g.resolution()) + ")";
        });

    py::class_<StiffnessOperator>(m, "StiffnessOperator")
        .def_property_readonly("grid", &StiffnessOperator::grid)
        .def_property_readonly("s", [](const StiffnessOperator& op) { return op.params().s; })
        .def_property_readonly("c_norm", [](const StiffnessOperator& op) { return op.params().c_norm; })
        .def_property_readonly("matrix", &StiffnessOperator::matrix)
        .def_property_readonly("tail", &StiffnessOperator::tail);

    m.def("build_grid", &build_grid, py::arg("dim"), py::arg("half_width"), py::arg("resolution"));
    m.def("normalization_constant", &normalization_constant, py::arg("s"), py::arg("dim"));
    m.def("assemble_stiffness", &assemble_stiffness, py::arg("grid"), py::arg("s"));
    m.def(
        "gagliardo_sq",
        [](const StiffnessOperator& op, const Eigen::VectorXd& u) { return gagliardo_sq(op, to_function(op.grid(), u)); },
        py::arg("op"), py::arg("u"));
    m.def(
        "fourier_seminorm_sq",
        [](const StiffnessOperator& op, const Eigen::VectorXd& u, int padding) {
            return fourier_seminorm_sq(op.grid(), op.params(), to_function(op.grid(), u), padding);
        },
        py::arg("op"), py::arg("u"), py::arg("padding") = 4);
    m.def(
        "ball_mask",
        [](const Grid& g, const std::vector<double>& center, double volume) { return ball_mask(g, to_point(center), volume).cells(); },
        py::arg("grid"), py::arg("center"), py::arg("volume"));
    m.def(
        "eigenpairs",
        [](const StiffnessOperator& op, const Cells& mask, int k) {
            const Spectrum sp = eigenpairs(restrict_to(op, to_mask(op.grid(), mask)), k);
            Eigen::MatrixXd vectors(op.grid().cell_count(), k);
            for (int j = 0; j < k; ++j) vectors.col(j) = sp.eigenfunctions[static_cast<std::size_t>(j)].values;
            return py::make_tuple(sp.eigenvalues, vectors, sp.residuals);
        },
        py::arg("op"), py::arg("mask"), py::arg("k"));
    m.def(
        "solve_torsion",
        [](const StiffnessOperator& op, const Cells& mask) {
            return solve_torsion(restrict_to(op, to_mask(op.grid(), mask))).values.values;
        },
        py::arg("op"), py::arg("mask"));
    m.def(
        "resolvent_norm_diff",
        [](const StiffnessOperator& op, const Cells& a, const Cells& b) {
            const DomainMask ma = to_mask(op.grid(), a), mb = to_mask(op.grid(), b);
            if (ma.empty() && mb.empty()) return 0.0;
            if (mb.empty()) return resolvent_norm(restrict_to(op, ma));
            if (ma.empty()) return resolvent_norm(restrict_to(op, mb));
            return resolvent_norm_diff(restrict_to(op, ma), restrict_to(op, mb));
        },
        py::arg("op"), py::arg("a"), py::arg("b"));
    m.def(
        "gamma_distance",
        [](const StiffnessOperator& op, const Cells& a, const Cells& b) {
            return gamma_distance(op, to_mask(op.grid(), a), to_mask(op.grid(), b));
        },
        py::arg("op"), py::arg("a"), py::arg("b"));
    m.def(
        "eval_functional",
        [](const std::string& functional, const StiffnessOperator& op, const Cells& mask) {
            return eval_functional(parse_functional(functional), op, to_mask(op.grid(), mask));
        },
        py::arg("functional"), py::arg("op"), py::arg("mask"));
    m.def(
        "two_ball_experiment",
        [](const StiffnessOperator& op, double total_volume, const std::vector<double>& distances) {
            py::list rows;
            for (const auto& r : two_ball_experiment(op, total_volume, distances))
                rows.append(py::dict(py::arg("d") = r.d, py::arg("lambda1_union") = r.lambda1_union,
                                     py::arg("lambda2_union") = r.lambda2_union,
                                     py::arg("lambda1_half_ball") = r.lambda1_half_ball, py::arg("gap") = r.gap));
            return rows;
        },
        py::arg("op"), py::arg("total_volume"), py::arg("distances"));
    m.def(
        "minimize_shape",
        [](const std::string& functional, const StiffnessOperator& op, double volume, int iterations, std::uint64_t seed) {
            AnnealOptions o;
            o.iterations = iterations;
            o.seed = seed;
            const ShapeTrajectory t = minimize_shape(parse_functional(functional), op, volume, o);
            return py::make_tuple(t.masks.back().cells(), t.values.back(), t.values);
        },
        py::arg("functional"), py::arg("op"), py::arg("volume"), py::arg("iterations"), py::arg("seed") = 1);
    m.def(
        "classify_family",
        [](const std::string& family, std::uint64_t seed, double bump_mass, double epsilon_fraction) {
            GeneratorOptions o;
            o.seed = seed;
            o.bump_mass = bump_mass;
            const FunctionSequence seq = generate_sequence(sequence_family_from_string(family), o);
            const TrichotomyReport r = classify(seq, epsilon_fraction * seq.mass_limit);
            return py::make_tuple(to_string(r.verdict), r.alpha ? py::cast(*r.alpha) : py::none());
        },
        py::arg("family"), py::arg("seed") = 1, py::arg("bump_mass") = 1.0, py::arg("epsilon_fraction") = 0.1);
    m.def(
        "lieb_translation_search",
        [](const StiffnessOperator& op, const Cells& a, const Cells& b) {
            const LiebResult r = lieb_translation_search(op, to_mask(op.grid(), a), to_mask(op.grid(), b));
            return py::dict(py::arg("z") = std::vector<int>{r.z[0], r.z[1]},
                            py::arg("lambda1_intersection") = r.lambda1_intersection, py::arg("bound") = r.bound,
                            py::arg("satisfied") = r.satisfied);
        },
        py::arg("op"), py::arg("a"), py::arg("b"));
    m.def("list_checks", [] {
        std::vector<std::string> names;
        for (const auto& c : list_checks()) names.push_back(c.name);
        return names;
    });
    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const ReportBundle b = run_experiment(parse_config(Json::parse(config_json)));
            py::list files;
            for (const auto& f : b.files) files.append(py::make_tuple(f.path, f.sha256));
            return py::make_tuple(b.passed, files);
        },
        py::arg("config_json"));
}
