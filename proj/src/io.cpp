#include "sigmort/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "sigmort/errors.hpp"
#include "sigmort/format.hpp"
#include "sigmort/rng.hpp"

namespace sigmort {

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_int(const std::string& tok, int& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

double parse_age_label(const std::string& label, bool* open) {
    std::string body = trim(label);
    bool is_open = !body.empty() && body.back() == '+';
    if (is_open) body.pop_back();
    int age = 0;
    if (!parse_int(body, age) || age < 0) throw DataError("invalid age label '" + label + "'");
    if (open) *open = is_open;
    return static_cast<double>(age);
}

std::string file_fingerprint(const std::string& path) {
    const std::string bytes = read_all(path);
    return path + " fnv1a=" + hex64(fnv1a(bytes.data(), bytes.size()));
}

// ---------------------------------------------------------------------------

void MortalitySurface::validate() const {
    const auto ny = static_cast<Eigen::Index>(years.size());
    const auto na = static_cast<Eigen::Index>(ages.size());
    if (ny == 0 || na == 0) throw DataError("surface is empty");
    if (values.rows() != ny || values.cols() != na)
        throw DataError("surface values are " + std::to_string(values.rows()) + "x" +
                        std::to_string(values.cols()) + " but grid is " + std::to_string(ny) + "x" +
                        std::to_string(na));
    if (age_labels.size() != ages.size()) throw DataError("age labels do not match ages");
    for (std::size_t i = 1; i < years.size(); ++i) {
        if (years[i] != years[i - 1] + 1)
            throw DataError("years are not contiguous at " + std::to_string(years[i]));
    }
    for (std::size_t i = 1; i < ages.size(); ++i) {
        if (!(ages[i] > ages[i - 1])) throw DataError("ages are not increasing at label " + age_labels[i]);
    }
    for (Eigen::Index r = 0; r < ny; ++r) {
        for (Eigen::Index c = 0; c < na; ++c) {
            if (!std::isfinite(values(r, c)))
                throw DataError("non-finite value at year " + std::to_string(years[r]) + ", age " + age_labels[c]);
        }
    }
    if (exposures && (exposures->rows() != ny || exposures->cols() != na))
        throw DataError("exposure grid does not match the rate grid");
}

MortalitySurface MortalitySurface::slice_years(int first, int last) const {
    auto lo = std::find(years.begin(), years.end(), first);
    auto hi = std::find(years.begin(), years.end(), last);
    if (lo == years.end() || hi == years.end() || hi < lo)
        throw DataError("year range " + std::to_string(first) + "-" + std::to_string(last) +
                        " is outside the surface");
    const auto r0 = static_cast<Eigen::Index>(lo - years.begin());
    const auto nr = static_cast<Eigen::Index>(hi - lo + 1);
    MortalitySurface out = *this;
    out.years.assign(lo, hi + 1);
    out.values = values.middleRows(r0, nr);
    if (exposures) out.exposures = exposures->middleRows(r0, nr);
    return out;
}

std::uint64_t MortalitySurface::fingerprint() const {
    std::uint64_t h = fnv1a(years.data(), years.size() * sizeof(int));
    for (const auto& l : age_labels) h = fnv1a(l.data(), l.size(), h);
    return fnv1a(values.data(), static_cast<std::size_t>(values.size()) * sizeof(double), h);
}

bool MortalitySurface::operator==(const MortalitySurface& other) const {
    return years == other.years && age_labels == other.age_labels && ages == other.ages &&
           scale == other.scale && values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() && values == other.values;
}

MortalitySurface make_surface(std::vector<int> years, const Eigen::MatrixXd& log_rates) {
    MortalitySurface s;
    s.years = std::move(years);
    for (Eigen::Index c = 0; c < log_rates.cols(); ++c) {
        s.ages.push_back(static_cast<double>(c));
        s.age_labels.push_back(std::to_string(c));
    }
    s.values = log_rates;
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------

SexColumn parse_sex(const std::string& name) {
    if (name == "total") return SexColumn::total;
    if (name == "female") return SexColumn::female;
    if (name == "male") return SexColumn::male;
    throw UsageError("unknown sex column '" + name + "' (expected total, female or male)");
}

std::string to_string(SexColumn sex) {
    switch (sex) {
        case SexColumn::female: return "female";
        case SexColumn::male: return "male";
        case SexColumn::total: break;
    }
    return "total";
}

HmdTable parse_hmd_table(std::istream& in, const std::string& source) {
    HmdTable table;
    std::string line;
    std::size_t lineno = 0;
    bool in_body = false;
    bool saw_any = false;
    std::vector<std::string> header_lines;
    auto value_of = [&](const std::string& tok, const char* what) -> std::optional<double> {
        if (tok == ".") return std::nullopt;
        double v = 0.0;
        if (!parse_double(tok, v) || !std::isfinite(v))
            throw DataError(source + ":" + std::to_string(lineno) + ": invalid " + what + " value '" + tok + "'");
        return v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (!t.empty()) saw_any = true;
        if (!in_body) {
            if (t.empty()) {
                in_body = !header_lines.empty();
                continue;
            }
            // Tolerate files whose header block lacks the blank separator.
            if (t.rfind("Year", 0) == 0) {
                in_body = true;
                continue;
            }
            // A headerless file starts straight away with data rows.
            std::istringstream probe(t);
            std::string first;
            int year = 0;
            std::size_t count = 0;
            for (std::string tk; probe >> tk; ++count)
                if (count == 0) first = tk;
            if (!(count == 5 && parse_int(first, year))) {
                header_lines.push_back(t);
                continue;
            }
            in_body = true;
        }
        if (t.empty()) continue;
        if (t.rfind("Year", 0) == 0) continue;
        std::istringstream ss(t);
        std::vector<std::string> tok{std::istream_iterator<std::string>(ss), std::istream_iterator<std::string>()};
        if (tok.size() != 5)
            throw DataError(source + ":" + std::to_string(lineno) + ": expected 5 columns, found " +
                            std::to_string(tok.size()));
        HmdRecord rec;
        rec.line = lineno;
        if (!parse_int(tok[0], rec.year))
            throw DataError(source + ":" + std::to_string(lineno) + ": invalid year '" + tok[0] + "'");
        try {
            rec.age = static_cast<int>(parse_age_label(tok[1], &rec.open_age));
        } catch (const DataError&) {
            throw DataError(source + ":" + std::to_string(lineno) + ": invalid age '" + tok[1] + "'");
        }
        rec.female = value_of(tok[2], "female");
        rec.male = value_of(tok[3], "male");
        rec.total = value_of(tok[4], "total");
        table.records.push_back(rec);
    }
    if (!saw_any) throw DataError(source + ": empty file");
    if (table.records.empty()) throw DataError(source + ": no data rows");
    if (!header_lines.empty()) table.title = header_lines.front();
    return table;
}

HmdTable parse_hmd_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_hmd_table(in, path);
}

namespace {

std::optional<double> pick(const HmdRecord& r, SexColumn c) {
    switch (c) {
        case SexColumn::female: return r.female;
        case SexColumn::male: return r.male;
        case SexColumn::total: break;
    }
    return r.total;
}

using Grid = std::map<std::pair<int, int>, std::optional<double>>;

Grid index_records(const HmdTable& t, SexColumn c, const char* what) {
    Grid g;
    for (const auto& r : t.records) {
        auto [it, fresh] = g.emplace(std::make_pair(r.year, r.age), pick(r, c));
        if (!fresh)
            throw DataError(std::string("duplicate ") + what + " record for year " + std::to_string(r.year) +
                            ", age " + std::to_string(r.age) + " (line " + std::to_string(r.line) + ")");
    }
    return g;
}

}  // namespace

MortalitySurface build_surface(const HmdTable& mx, const HmdTable* exposures, const SurfaceOptions& opts) {
    if (opts.max_age < 1) throw UsageError("max age must be at least 1");
    const Grid rates = index_records(mx, opts.column, "rate");
    Grid expo;
    if (exposures) expo = index_records(*exposures, opts.column, "exposure");

    std::set<int> present_years;
    for (const auto& [key, v] : rates) present_years.insert(key.first);
    const int first = opts.start_year.value_or(*present_years.begin());
    const int last = opts.end_year.value_or(*present_years.rbegin());
    if (last < first) throw DataError("end year precedes start year");
    for (int y = first; y <= last; ++y) {
        if (!present_years.count(y)) throw DataError("year " + std::to_string(y) + " is entirely missing");
    }

    const int ny = last - first + 1;
    const int na = opts.max_age + 1;
    Eigen::MatrixXd raw = Eigen::MatrixXd::Constant(ny, na, std::numeric_limits<double>::quiet_NaN());
    Eigen::MatrixXd ex = Eigen::MatrixXd::Zero(ny, na);
    bool have_any_exposure = false;

    // Per (year, grid column): sum(mx*E) and sum(E) over ages with a rate,
    // total exposure, sum(mx), count.
    struct Acc {
        double wsum = 0, wexp = 0, esum = 0, sum = 0;
        int n = 0;
    };
    std::vector<Acc> acc(static_cast<std::size_t>(ny * na));
    for (const auto& [key, v] : rates) {
        const auto [year, age] = key;
        if (year < first || year > last) continue;
        const int col = std::min(age, opts.max_age);
        Acc& a = acc[static_cast<std::size_t>((year - first) * na + col)];
        std::optional<double> e;
        if (exposures) {
            auto it = expo.find(key);
            if (it != expo.end()) e = it->second;
        }
        if (e && *e >= 0.0) {
            a.esum += *e;
            have_any_exposure = true;
        }
        if (!v) continue;
        a.sum += *v;
        ++a.n;
        if (e && *e >= 0.0) {
            a.wsum += *v * *e;
            a.wexp += *e;
        }
    }
    for (int r = 0; r < ny; ++r) {
        for (int c = 0; c < na; ++c) {
            const Acc& a = acc[static_cast<std::size_t>(r * na + c)];
            ex(r, c) = a.esum;
            if (a.n == 0) continue;
            raw(r, c) = (exposures && a.wexp > 0.0) ? a.wsum / a.wexp : a.sum / a.n;
        }
    }

    std::size_t repairs = 0;
    for (int c = 0; c < na; ++c) {
        double min_pos = std::numeric_limits<double>::infinity();
        for (int r = 0; r < ny; ++r) {
            if (std::isfinite(raw(r, c)) && raw(r, c) > 0.0) min_pos = std::min(min_pos, raw(r, c));
        }
        for (int r = 0; r < ny; ++r) {
            if (std::isfinite(raw(r, c)) && raw(r, c) > 0.0) continue;
            if (!std::isfinite(min_pos))
                throw DataError("age " + std::to_string(c) + " has no positive rate in any year");
            raw(r, c) = min_pos;
            ++repairs;
        }
    }

    MortalitySurface s;
    for (int y = first; y <= last; ++y) s.years.push_back(y);
    for (int a = 0; a < na; ++a) {
        s.ages.push_back(a);
        s.age_labels.push_back(a == opts.max_age ? std::to_string(a) + "+" : std::to_string(a));
    }
    s.values = raw.array().log().matrix();
    for (int r = 0; r < ny; ++r) {
        for (int c = 0; c < na; ++c) {
            const double v = s.values(r, c);
            if (v < kLogRateFloor || v > kLogRateCeiling)
                throw DataError("log rate " + format_double(v) + " at year " + std::to_string(first + r) +
                                ", age " + s.age_labels[c] + " is outside [-15, 1]; check rate units");
        }
    }
    s.scale = Scale::log;
    if (have_any_exposure) s.exposures = ex;
    s.provenance.country = mx.title.substr(0, mx.title.find(','));
    s.provenance.repairs = repairs;
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------

MortalitySurface parse_csv_matrix(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    Scale scale = Scale::log;
    std::vector<std::string> header;
    std::vector<int> years;
    std::vector<std::vector<double>> rows;
    std::set<int> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            if (t.rfind("#scale=", 0) == 0) {
                const std::string v = trim(t.substr(7));
                if (v == "log") scale = Scale::log;
                else if (v == "raw") scale = Scale::raw;
                else throw DataError(source + ":" + std::to_string(lineno) + ": unknown scale '" + v + "'");
            }
            continue;
        }
        auto cells = split(t, ',');
        if (header.empty()) {
            if (cells.empty() || cells[0] != "year")
                throw DataError(source + ":" + std::to_string(lineno) + ": header must start with 'year'");
            header = std::move(cells);
            if (header.size() < 2) throw DataError(source + ": header lists no ages");
            continue;
        }
        if (cells.size() != header.size())
            throw DataError(source + ":" + std::to_string(lineno) + ": ragged row with " +
                            std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
        int year = 0;
        if (!parse_int(cells[0], year))
            throw DataError(source + ":" + std::to_string(lineno) + ": invalid year '" + cells[0] + "'");
        if (!seen.insert(year).second)
            throw DataError(source + ":" + std::to_string(lineno) + ": duplicate year " + std::to_string(year));
        std::vector<double> row(cells.size() - 1);
        for (std::size_t i = 1; i < cells.size(); ++i) {
            if (!parse_double(cells[i], row[i - 1]) || !std::isfinite(row[i - 1]))
                throw DataError(source + ":" + std::to_string(lineno) + ": invalid value '" + cells[i] + "'");
        }
        years.push_back(year);
        rows.push_back(std::move(row));
    }
    if (header.empty() || rows.empty()) throw DataError(source + ": no data rows");

    // Order-independent: sort by year.
    std::vector<std::size_t> order(years.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return years[a] < years[b]; });

    MortalitySurface s;
    for (std::size_t i = 1; i < header.size(); ++i) {
        s.age_labels.push_back(header[i]);
        s.ages.push_back(parse_age_label(header[i]));
    }
    s.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
    for (std::size_t r = 0; r < order.size(); ++r) {
        s.years.push_back(years[order[r]]);
        const auto& row = rows[order[r]];
        for (std::size_t c = 0; c < row.size(); ++c) {
            double v = row[c];
            if (scale == Scale::raw) {
                if (!(v > 0.0))
                    throw DataError(source + ": raw rate " + format_double(v) + " in year " +
                                    std::to_string(years[order[r]]) + " is not positive");
                v = std::log(v);
            }
            s.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    s.scale = Scale::log;
    s.validate();
    return s;
}

MortalitySurface parse_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_csv_matrix(in, path);
}

void write_surface_csv(std::ostream& out, const MortalitySurface& s) {
    out << "#scale=log\nyear";
    for (const auto& l : s.age_labels) out << ',' << l;
    out << '\n';
    for (std::size_t r = 0; r < s.years.size(); ++r) {
        out << s.years[r];
        for (Eigen::Index c = 0; c < s.values.cols(); ++c)
            out << ',' << format_double(s.values(static_cast<Eigen::Index>(r), c));
        out << '\n';
    }
}

MortalitySurface load_surface(const std::string& path, const std::optional<std::string>& exposure_path,
                              const SurfaceOptions& opts) {
    const bool is_csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    MortalitySurface s;
    if (is_csv) {
        s = parse_csv_file(path);
        if (opts.start_year || opts.end_year)
            s = s.slice_years(opts.start_year.value_or(s.years.front()), opts.end_year.value_or(s.years.back()));
    } else {
        const HmdTable mx = parse_hmd_file(path);
        std::optional<HmdTable> ex;
        if (exposure_path) ex = parse_hmd_file(*exposure_path);
        s = build_surface(mx, ex ? &*ex : nullptr, opts);
    }
    s.provenance.sources.push_back(file_fingerprint(path));
    if (exposure_path) s.provenance.sources.push_back(file_fingerprint(*exposure_path));
    return s;
}

}  // namespace sigmort
