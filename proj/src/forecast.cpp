#include "mortality/forecast.hpp"

#include "mortality/error.hpp"
#include "mortality/numerics.hpp"

namespace mortality {

double interval_multiplier(double level) {
    if (!(level > 0.0 && level < 100.0)) throw NumericError("interval level must lie in (0, 100)");
    const double alpha = 1.0 - level / 100.0;
    return normal_quantile(1.0 - alpha / 2.0);
}

void apply_normal_intervals(ForecastSurface& fc) {
    const double z = interval_multiplier(fc.level);
    Eigen::MatrixXd half = z * fc.variance.cwiseMax(0.0).cwiseSqrt();
    fc.lower = fc.point - half;
    fc.upper = fc.point + half;
}

}  // namespace mortality
