#pragma once

#include "mortality/evaluate.hpp"
#include "mortality/surface.hpp"

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace mortality::cli {

/// Exit statuses of the command-line tool.
enum ExitStatus : int { kSuccess = 0, kComputationError = 1, kUsageError = 2 };

/// Thrown for invalid flags or flag combinations.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Environment variable naming the default data directory.
inline constexpr const char* kDataDirEnv = "MORTALITY_DATA_DIR";

struct RunConfig {
    std::string command;
    std::string data_path;
    Gender gender = Gender::male;
    Window ages{0, 100};
    std::optional<Window> years;  // fit window; defaults to every year in the data
    Window train{1950, 1975};
    Window test{1976, 2005};
    int horizon = 30;
    std::optional<int> table_year;
    std::vector<ModelKind> models{ModelKind::lc};
    ModelSettings settings;
    QMethod q_method = QMethod::constant_hazard;
    std::string output = "out";
    std::set<std::string> formats{"csv", "json", "svg"};

    bool wants(const std::string& fmt) const { return formats.count(fmt) > 0; }
};

/// Parses `A:B` (inclusive on both ends).
Window parse_window(const std::string& text);

/// Resolves the data file: an explicit path, or a directory (explicit or from
/// the environment) holding `Mx_1x1.txt`.
std::string resolve_data_path(const std::string& flag_value);

MortalitySurface load_surface(const RunConfig& config, std::optional<Window> years);

int cmd_fit(const RunConfig& config, std::ostream& out);
int cmd_forecast(const RunConfig& config, std::ostream& out);
int cmd_backtest(const RunConfig& config, std::ostream& out);
int cmd_lifetable(const RunConfig& config, std::ostream& out);
int cmd_compare(const RunConfig& config, std::ostream& out);

/// Full command-line entry point. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mortality::cli
