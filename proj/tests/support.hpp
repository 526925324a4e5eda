#pragma once

#include "daekit/reduction.hpp"

#include <doctest.h>

#include <initializer_list>

namespace testing_support {

using daekit::Mat;
using daekit::Vec;

inline Mat mat(int r, int c, std::initializer_list<double> v) {
    Mat m(r, c);
    auto it = v.begin();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = *it++;
    return m;
}

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline double dist(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline daekit::NonlinearField field(std::function<Vec(double, const Vec&)> f) {
    daekit::NonlinearField nf;
    nf.eval = std::move(f);
    return nf;
}

}  // namespace testing_support
