#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sigmort {

enum class Scale { log, raw };

struct Provenance {
    std::string country;
    /// "name fnv1a=<hex>" per ingested file.
    std::vector<std::string> sources;
    /// Zero or missing rates replaced during ingestion.
    std::size_t repairs = 0;
};

/// Year x age grid of mortality rates. Ages are contiguous 0..max_age with an
/// optional terminal open group labelled "max_age+".
struct MortalitySurface {
    std::vector<int> years;
    std::vector<std::string> age_labels;
    std::vector<double> ages;
    Eigen::MatrixXd values;  ///< rows = years, cols = ages
    Scale scale = Scale::log;
    Provenance provenance;
    /// Exposure-to-risk on the same grid, when the source provided it.
    std::optional<Eigen::MatrixXd> exposures;

    std::size_t year_count() const { return years.size(); }
    std::size_t age_count() const { return ages.size(); }

    /// Throws DataError when the grid is inconsistent or values are non-finite.
    void validate() const;

    /// Years [first, last] inclusive, metadata carried over.
    MortalitySurface slice_years(int first, int last) const;

    /// Hash of years, labels and values.
    std::uint64_t fingerprint() const;

    bool operator==(const MortalitySurface& other) const;
};

/// Builds a log-scale surface with integer ages 0..p-1 and no open group;
/// mostly for synthetic data.
MortalitySurface make_surface(std::vector<int> years, const Eigen::MatrixXd& log_rates);

// ---------------------------------------------------------------------------
// Human Mortality Database 1x1 tables

struct HmdRecord {
    int year = 0;
    int age = 0;
    bool open_age = false;  ///< age token carried a trailing '+'
    std::optional<double> female;
    std::optional<double> male;
    std::optional<double> total;
    std::size_t line = 0;
};

enum class SexColumn { total, female, male };
SexColumn parse_sex(const std::string& name);
std::string to_string(SexColumn sex);

struct HmdTable {
    std::string title;  ///< first header line, e.g. "Japan, Death rates (period 1x1), ..."
    std::vector<HmdRecord> records;
};

/// Parses whitespace-delimited "Year Age Female Male Total" rows. The header
/// block ends at the first blank line and is followed by the column-name line.
/// Missing values are written ".". Throws DataError with line numbers.
HmdTable parse_hmd_table(std::istream& in, const std::string& source = "<stream>");
HmdTable parse_hmd_file(const std::string& path);

struct SurfaceOptions {
    int max_age = 100;
    std::optional<int> start_year;
    std::optional<int> end_year;
    SexColumn column = SexColumn::total;
};

/// Shapes HMD rates (and optional exposures) into a log-rate surface.
///
/// Ages above max_age are merged into the open group "max_age+": with
/// exposures the group rate is sum(mx * E) / sum(E), otherwise the mean of the
/// available rates. Zero or missing rates are replaced by the smallest positive
/// rate seen at that age in any year; the count is kept in provenance.repairs.
/// Log rates outside [-15, 1] are rejected as unit errors.
MortalitySurface build_surface(const HmdTable& mx, const HmdTable* exposures, const SurfaceOptions& opts);

/// Lower bound and upper bound of plausible log mortality rates.
inline constexpr double kLogRateFloor = -15.0;
inline constexpr double kLogRateCeiling = 1.0;

// ---------------------------------------------------------------------------
// Surface CSV: "#scale=log|raw" pragma, header "year,<age labels...>", one row
// per year. Lines starting with '#' other than the pragma are comments.

MortalitySurface parse_csv_matrix(std::istream& in, const std::string& source = "<stream>");
MortalitySurface parse_csv_file(const std::string& path);
void write_surface_csv(std::ostream& out, const MortalitySurface& s);

/// Loads either format by extension (.csv -> surface CSV, anything else -> HMD).
MortalitySurface load_surface(const std::string& path, const std::optional<std::string>& exposure_path,
                              const SurfaceOptions& opts);

/// fnv1a of the whole file, as "<path> fnv1a=<hex>".
std::string file_fingerprint(const std::string& path);

/// Parses an age label ("37" or "100+") into its numeric age.
double parse_age_label(const std::string& label, bool* open = nullptr);

}  // namespace sigmort
