#include "mortality/surface.hpp"

#include "mortality/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace mortality {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool parse_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string line_error(std::size_t line_no, const std::string& what) {
    return "line " + std::to_string(line_no) + ": " + what;
}

}  // namespace

std::string_view to_string(Gender g) {
    switch (g) {
        case Gender::female: return "female";
        case Gender::male: return "male";
        case Gender::total: return "total";
    }
    return "total";
}

Gender parse_gender(std::string_view text) {
    if (text == "female") return Gender::female;
    if (text == "male") return Gender::male;
    if (text == "total") return Gender::total;
    throw DataError("unknown gender '" + std::string(text) + "' (expected female, male or total)");
}

std::optional<double> HmdRecord::rate(Gender g) const {
    switch (g) {
        case Gender::female: return female;
        case Gender::male: return male;
        case Gender::total: return total;
    }
    return std::nullopt;
}

MortalitySurface::MortalitySurface(Window ages, Window years, Eigen::MatrixXd rates, Gender gender)
    : ages_(ages), years_(years), rates_(std::move(rates)), gender_(gender) {
    if (ages_.size() < 1 || years_.size() < 1) throw DataError("surface window is empty");
    if (rates_.rows() != ages_.size() || rates_.cols() != years_.size()) {
        throw DataError("surface rate matrix is " + std::to_string(rates_.rows()) + "x" +
                        std::to_string(rates_.cols()) + ", expected " + std::to_string(ages_.size()) +
                        "x" + std::to_string(years_.size()));
    }
    for (Eigen::Index j = 0; j < rates_.cols(); ++j) {
        for (Eigen::Index i = 0; i < rates_.rows(); ++i) {
            double m = rates_(i, j);
            if (!std::isfinite(m) || m <= 0.0) {
                throw DataError("rate at age " + std::to_string(ages_.first + i) + ", year " +
                                std::to_string(years_.first + j) + " is not finite and positive");
            }
        }
    }
}

std::vector<int> MortalitySurface::age_list() const {
    std::vector<int> out(ages_.size());
    for (int i = 0; i < ages_.size(); ++i) out[i] = ages_.first + i;
    return out;
}

std::vector<int> MortalitySurface::year_list() const {
    std::vector<int> out(years_.size());
    for (int i = 0; i < years_.size(); ++i) out[i] = years_.first + i;
    return out;
}

std::vector<HmdRecord> parse_hmd_rates(std::istream& in) {
    std::vector<HmdRecord> records;
    std::string line;
    std::size_t line_no = 0;
    bool in_body = false;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_ws(line);
        if (fields.empty()) continue;
        int year = 0;
        if (!parse_int(fields[0], year)) {
            if (in_body) throw DataError(line_error(line_no, "expected a year in the first column"));
            continue;  // preamble or column header
        }
        in_body = true;
        if (fields.size() != 5) {
            throw DataError(line_error(line_no, "expected 5 columns (Year Age Female Male Total), got " +
                                                    std::to_string(fields.size())));
        }
        HmdRecord rec;
        rec.year = year;
        std::string_view age = fields[1];
        if (!age.empty() && age.back() == '+') age.remove_suffix(1);
        if (!parse_int(age, rec.age) || rec.age < 0) {
            throw DataError(line_error(line_no, "unparsable age '" + std::string(fields[1]) + "'"));
        }
        std::optional<double>* slots[3] = {&rec.female, &rec.male, &rec.total};
        for (int k = 0; k < 3; ++k) {
            std::string_view tok = fields[2 + k];
            if (tok == ".") continue;
            double v = 0.0;
            if (!parse_real(tok, v) || v < 0.0) {
                throw DataError(line_error(line_no, "unparsable rate '" + std::string(tok) + "'"));
            }
            *slots[k] = v;
        }
        records.push_back(rec);
    }
    if (records.empty()) throw DataError("no mortality records found in input");
    return records;
}

std::vector<HmdRecord> read_hmd_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path + "'");
    try {
        return parse_hmd_rates(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

MortalitySurface build_surface(const std::vector<HmdRecord>& records, Gender gender, Window ages,
                               Window years) {
    if (ages.size() < 1 || years.size() < 1) throw DataError("requested window is empty");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd rates = Eigen::MatrixXd::Constant(ages.size(), years.size(), nan);
    Eigen::MatrixXi present = Eigen::MatrixXi::Zero(ages.size(), years.size());
    for (const auto& rec : records) {
        if (!ages.contains(rec.age) || !years.contains(rec.year)) continue;
        int i = rec.age - ages.first;
        int j = rec.year - years.first;
        present(i, j) = 1;
        auto r = rec.rate(gender);
        if (r && *r > 0.0) rates(i, j) = *r;
    }

    std::string missing;
    int n_missing = 0;
    for (int j = 0; j < years.size(); ++j) {
        for (int i = 0; i < ages.size(); ++i) {
            if (present(i, j)) continue;
            if (n_missing < 20) {
                missing += (n_missing ? ", " : "") + std::string("(") + std::to_string(ages.first + i) +
                           ", " + std::to_string(years.first + j) + ")";
            }
            ++n_missing;
        }
    }
    if (n_missing > 0) {
        if (n_missing > 20) missing += ", ...";
        throw DataError("requested window not covered by records; missing " + std::to_string(n_missing) +
                        " (age, year) cells: " + missing);
    }

    for (int i = 0; i < ages.size(); ++i) {
        double min_pos = std::numeric_limits<double>::infinity();
        for (int j = 0; j < years.size(); ++j) {
            if (!std::isnan(rates(i, j))) min_pos = std::min(min_pos, rates(i, j));
        }
        if (!std::isfinite(min_pos)) {
            throw DataError("no positive rate at age " + std::to_string(ages.first + i) +
                            " in the requested years; cannot repair zeros");
        }
        for (int j = 0; j < years.size(); ++j) {
            if (std::isnan(rates(i, j))) rates(i, j) = 0.5 * min_pos;
        }
    }
    return MortalitySurface(ages, years, std::move(rates), gender);
}

MortalitySurface slice_window(const MortalitySurface& surface, Window years) {
    if (years.size() < 1 || !surface.years().contains(years)) {
        throw DataError("year window " + std::to_string(years.first) + ":" + std::to_string(years.last) +
                        " outside surface range " + std::to_string(surface.years().first) + ":" +
                        std::to_string(surface.years().last));
    }
    Eigen::MatrixXd sub =
        surface.rates().middleCols(years.first - surface.years().first, years.size());
    return MortalitySurface(surface.ages(), years, std::move(sub), surface.gender());
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_surface_csv(std::ostream& out, const MortalitySurface& surface) {
    out << "age,year,rate\n";
    for (int j = 0; j < surface.num_years(); ++j) {
        for (int i = 0; i < surface.num_ages(); ++i) {
            out << surface.ages().first + i << ',' << surface.years().first + j << ','
                << format_double(surface.rates()(i, j)) << '\n';
        }
    }
}

MortalitySurface read_surface_csv(std::istream& in, Gender gender) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("empty surface CSV");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "age,year,rate") throw DataError("surface CSV header must be 'age,year,rate'");

    std::map<std::pair<int, int>, double> cells;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string_view sv(line);
        auto c1 = sv.find(',');
        auto c2 = c1 == std::string_view::npos ? c1 : sv.find(',', c1 + 1);
        int age = 0, year = 0;
        double rate = 0.0;
        if (c2 == std::string_view::npos || !parse_int(sv.substr(0, c1), age) ||
            !parse_int(sv.substr(c1 + 1, c2 - c1 - 1), year) || !parse_real(sv.substr(c2 + 1), rate)) {
            throw DataError(line_error(line_no, "malformed surface CSV row"));
        }
        cells[{age, year}] = rate;
    }
    if (cells.empty()) throw DataError("surface CSV has no rows");
    Window ages{std::numeric_limits<int>::max(), std::numeric_limits<int>::min()};
    Window years = ages;
    for (const auto& [key, _] : cells) {
        ages.first = std::min(ages.first, key.first);
        ages.last = std::max(ages.last, key.first);
        years.first = std::min(years.first, key.second);
        years.last = std::max(years.last, key.second);
    }
    if (static_cast<std::size_t>(ages.size()) * years.size() != cells.size()) {
        throw DataError("surface CSV is not a complete rectangular grid");
    }
    Eigen::MatrixXd rates(ages.size(), years.size());
    for (const auto& [key, v] : cells) rates(key.first - ages.first, key.second - years.first) = v;
    return MortalitySurface(ages, years, std::move(rates), gender);
}

}  // namespace mortality
