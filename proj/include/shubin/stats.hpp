#pragma once

#include <vector>

namespace shubin {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    int samples = 0;
};

// ordinary least squares y = intercept + slope * x
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace shubin
