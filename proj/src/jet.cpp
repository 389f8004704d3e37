#include "shubin/jet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shubin {

Jet::Jet(int order, double value) : c_(std::size_t(order + 1), 0.0) { c_[0] = value; }

Jet Jet::variable(int order, double x0) {
    Jet j(order, x0);
    if (order >= 1) j[1] = 1.0;
    return j;
}

double Jet::derivative(int i) const {
    double f = 1.0;
    for (int k = 2; k <= i; ++k) f *= k;
    return f * c_[std::size_t(i)];
}

Jet Jet::operator+(const Jet& o) const {
    Jet r(std::min(order(), o.order()));
    for (int i = 0; i <= r.order(); ++i) r[i] = (*this)[i] + o[i];
    return r;
}

Jet Jet::operator-(const Jet& o) const { return *this + (-o); }

Jet Jet::operator*(const Jet& o) const {
    Jet r(std::min(order(), o.order()));
    for (int n = 0; n <= r.order(); ++n) {
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) acc += (*this)[i] * o[n - i];
        r[n] = acc;
    }
    return r;
}

Jet Jet::operator/(const Jet& o) const { return *this * o.reciprocal(); }

Jet Jet::operator+(double a) const {
    Jet r = *this;
    r[0] += a;
    return r;
}

Jet Jet::operator*(double a) const {
    Jet r = *this;
    for (auto& v : r.c_) v *= a;
    return r;
}

Jet Jet::operator-() const { return *this * -1.0; }

Jet Jet::reciprocal() const {
    if (c_[0] == 0.0) throw std::domain_error("jet reciprocal of zero");
    Jet r(order());
    r[0] = 1.0 / c_[0];
    for (int n = 1; n <= order(); ++n) {
        double acc = 0.0;
        for (int i = 1; i <= n; ++i) acc += (*this)[i] * r[n - i];
        r[n] = -acc / c_[0];
    }
    return r;
}

Jet Jet::exp() const {
    Jet r(order());
    r[0] = std::exp(c_[0]);
    for (int n = 1; n <= order(); ++n) {
        double acc = 0.0;
        for (int i = 1; i <= n; ++i) acc += i * (*this)[i] * r[n - i];
        r[n] = acc / n;
    }
    return r;
}

Jet Jet::log() const {
    if (!(c_[0] > 0.0)) throw std::domain_error("jet log of a nonpositive value");
    Jet r(order());
    r[0] = std::log(c_[0]);
    for (int n = 1; n <= order(); ++n) {
        double acc = 0.0;
        for (int i = 1; i < n; ++i) acc += i * r[i] * (*this)[n - i];
        r[n] = ((*this)[n] - acc / n) / c_[0];
    }
    return r;
}

Jet Jet::pow(double p) const { return (log() * p).exp(); }

}  // namespace shubin
