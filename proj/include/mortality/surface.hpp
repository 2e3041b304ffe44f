#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mortality {

enum class Gender { female, male, total };

std::string_view to_string(Gender g);
Gender parse_gender(std::string_view text);

/// Inclusive integer range, used for both age and calendar-year windows.
struct Window {
    int first = 0;
    int last = 0;

    int size() const { return last - first + 1; }
    bool contains(int v) const { return v >= first && v <= last; }
    bool contains(const Window& other) const { return other.first >= first && other.last <= last; }
    bool operator==(const Window&) const = default;
};

/// One row of an HMD Mx_1x1 file. Missing values ('.') are empty optionals.
struct HmdRecord {
    int year = 0;
    int age = 0;
    std::optional<double> female;
    std::optional<double> male;
    std::optional<double> total;

    std::optional<double> rate(Gender g) const;
};

/// Rectangular age x year grid of central death rates.
///
/// Storage is column-major with one column per calendar year, so every
/// year's age curve is contiguous. All rates are finite and positive.
class MortalitySurface {
public:
    MortalitySurface(Window ages, Window years, Eigen::MatrixXd rates, Gender gender);

    const Window& ages() const { return ages_; }
    const Window& years() const { return years_; }
    Gender gender() const { return gender_; }

    int num_ages() const { return ages_.size(); }
    int num_years() const { return years_.size(); }

    const Eigen::MatrixXd& rates() const { return rates_; }
    double rate(int age, int year) const { return rates_(age - ages_.first, year - years_.first); }

    /// ln m_{x,t}, same layout as rates().
    Eigen::MatrixXd log_rates() const { return rates_.array().log().matrix(); }

    std::vector<int> age_list() const;
    std::vector<int> year_list() const;

private:
    Window ages_;
    Window years_;
    Eigen::MatrixXd rates_;
    Gender gender_;
};

/// Parses the HMD Mx_1x1 text layout. Header lines preceding the first data
/// row are skipped; every row after that must hold `Year Age Female Male Total`.
std::vector<HmdRecord> parse_hmd_rates(std::istream& in);
std::vector<HmdRecord> read_hmd_file(const std::string& path);

/// Builds a validated surface for the requested window. Zero or missing rates
/// are replaced by half the smallest positive rate observed at the same age
/// across the window's years.
MortalitySurface build_surface(const std::vector<HmdRecord>& records, Gender gender, Window ages,
                               Window years);

MortalitySurface slice_window(const MortalitySurface& surface, Window years);

/// CSV with header `age,year,rate`, one row per cell, shortest round-trip formatting.
void write_surface_csv(std::ostream& out, const MortalitySurface& surface);
MortalitySurface read_surface_csv(std::istream& in, Gender gender);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace mortality
