#ifndef TARGETOPT_TESTS_HELPERS_HPP
#define TARGETOPT_TESTS_HELPERS_HPP

#include <initializer_list>

#include <targetopt/dataspace.hpp>

namespace testing_helpers {

using targetopt::Matrix;
using targetopt::Vector;

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

inline Matrix rows(std::initializer_list<std::initializer_list<double>> r)
{
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double x : row)
            m(i, j++) = x;
        ++i;
    }
    return m;
}

inline targetopt::ParameterSpace box(double lo, double hi, int P = 2)
{
    return {Vector::Constant(P, lo), Vector::Constant(P, hi)};
}

} // namespace testing_helpers

#endif
