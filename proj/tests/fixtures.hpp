#pragma once
// The four worked examples as in-memory systems, shared by the unit tests.

#include "daepencil/dae.hpp"
#include "daepencil/decomposition.hpp"
#include "daepencil/reduction.hpp"

#include <initializer_list>
#include <string>
#include <vector>

namespace fixtures {

using daepencil::Mat;
using daepencil::Vec;

inline Mat mat(int r, int c, std::initializer_list<double> data) {
    Mat M(r, c);
    auto it = data.begin();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = *it++;
    return M;
}

inline Vec vec(std::initializer_list<double> data) {
    Vec v(static_cast<Eigen::Index>(data.size()));
    Eigen::Index i = 0;
    for (double d : data) v(i++) = d;
    return v;
}

inline daepencil::Pencil ex1_pencil() { return {mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {0, 0, 1, 1})}; }
inline daepencil::Pencil ex2_pencil() { return {mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {0, 0, 0, 1})}; }
inline daepencil::Pencil ex3_pencil(double b = 1.0) { return {mat(2, 2, {1, 0, 0, 0}), mat(2, 2, {b, 0, 0, 1})}; }
inline daepencil::Pencil ex4_pencil() {
    return {mat(3, 3, {1, 0, -1, 0, 0, 0, 0, 0, 0}), mat(3, 3, {1, -1, -1, 1, 1, -1, 0, 2, 0})};
}

inline const std::vector<std::string> ex4_f{"(x1-x3-1)^3 + x1 - x3 + x2", "x1 - x3 + x2",
                                            "-(x2^3 + 3*x2^2 + x2 + 1) - (t+1)*x3^2"};

inline daepencil::ReducedSystem reduced(daepencil::Pencil p, const std::vector<std::string>& f) {
    auto dae = daepencil::make_dae(p, f);
    auto dec = daepencil::decompose(p);
    return daepencil::ReducedSystem(std::move(dae), std::move(dec));
}

inline daepencil::ReducedSystem ex1() { return reduced(ex1_pencil(), {"x1^2", "sin(t)"}); }
inline daepencil::ReducedSystem ex2() { return reduced(ex2_pencil(), {"2*x2", "x1*x2 - 1"}); }
inline daepencil::ReducedSystem ex3(double b = 1.0) { return reduced(ex3_pencil(b), {"0", "x1^2 + x2^2 + x2 - 1"}); }
inline daepencil::ReducedSystem ex4() { return reduced(ex4_pencil(), ex4_f); }

} // namespace fixtures
