#pragma once

#include <vector>

namespace shubin {

// Truncated Taylor series: c[i] = f^{(i)}(x0) / i!, i = 0..order.
class Jet {
public:
    explicit Jet(int order, double value = 0.0);
    static Jet variable(int order, double x0);

    int order() const { return int(c_.size()) - 1; }
    double operator[](int i) const { return c_[std::size_t(i)]; }
    double& operator[](int i) { return c_[std::size_t(i)]; }
    // i-th derivative at x0
    double derivative(int i) const;

    Jet operator+(const Jet& o) const;
    Jet operator-(const Jet& o) const;
    Jet operator*(const Jet& o) const;
    Jet operator/(const Jet& o) const;
    Jet operator+(double a) const;
    Jet operator*(double a) const;
    Jet operator-() const;

    Jet reciprocal() const;
    Jet exp() const;
    Jet log() const;
    Jet pow(double p) const;  // needs c[0] > 0

private:
    std::vector<double> c_;
};

}  // namespace shubin
