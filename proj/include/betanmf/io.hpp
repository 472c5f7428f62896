#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "betanmf/matrix.hpp"
#include "betanmf/nmf.hpp"

namespace betanmf::io {

struct Provenance {
    std::string source;
    Eigen::Index floored{0};  // entries raised to the floor at load time
};

struct Dataset {
    NonNegMatrix<double> matrix;
    std::optional<std::vector<std::string>> row_labels;
    std::optional<std::vector<std::string>> col_labels;
    Provenance provenance;
};

/// Parse failure with 1-based row/column location.
class CsvParseError : public std::runtime_error {
  public:
    CsvParseError(const std::filesystem::path& path, std::size_t row,
                  std::size_t column, const std::string& what);
    [[nodiscard]] std::size_t row() const { return row_; }
    [[nodiscard]] std::size_t column() const { return column_; }

  private:
    std::size_t row_;
    std::size_t column_;
};

struct CsvOptions {
    char delimiter{','};
    bool has_header{false};
    double floor{kDefaultFloor};
};

/// Loads a rectangular numeric CSV file into a floored dataset.
Dataset load_csv(const std::filesystem::path& path,
                 const CsvOptions& options = {});

/// Loads a UCI sonar-format file: rows of 60 features in [0, 1] plus one
/// trailing label ("R"/"M" or "2"/"3"). Labels are stored per row, mapped
/// R -> "2" and M -> "3". Features outside [0, 1] produce a warning string,
/// not an error.
Dataset load_sonar(const std::filesystem::path& path,
                   double floor = kDefaultFloor,
                   std::vector<std::string>* warnings = nullptr);

/// Writes a matrix as CSV using shortest round-trip number formatting.
void save_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path,
              char delimiter = ',');

/// Random exact factorization instance: W*, H* uniform in (0,1] and
/// V = W* H*, or V scaled entrywise by uniform noise from (1-a, 1+a] when a
/// noise amplitude a in [0, 1) is given. Returns the dataset and the ground
/// truth factors.
std::pair<Dataset, nmf::FactorPair<double>> gen_synthetic(
    Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
    std::uint64_t seed, std::optional<double> noise = std::nullopt);

struct TrajectoryRecord {
    std::string run;
    std::string algorithm;
    std::string beta;  // divergence tag, e.g. "std:2" or "C@flip:1"
    std::uint64_t seed{0};
    std::vector<std::pair<int, double>> points;  // (iter, objective), from 0

    friend bool operator==(const TrajectoryRecord&,
                           const TrajectoryRecord&) = default;
};

enum class TrajectoryFormat { Csv, Json };

/// Writes records either as CSV with columns
/// run,algorithm,beta,seed,iter,objective or as a JSON array of record
/// objects. Values survive a round trip exactly (shortest round-trip
/// decimals). Throws if records are empty or malformed.
void export_trajectory(const std::vector<TrajectoryRecord>& records,
                       const std::filesystem::path& path,
                       TrajectoryFormat format);

std::vector<TrajectoryRecord> load_trajectory(const std::filesystem::path& path,
                                              TrajectoryFormat format);

/// Which argument of d(.|.) the curve sweeps. PointFirst emits
/// d(point | ref); RefFirst emits d(ref | point).
enum class CurveOrder { PointFirst, RefFirst };

struct CurvePoint {
    double beta;
    Convention convention;
    double point;
    double value;
};

/// Dense samples of the divergence curve against a fixed reference, one
/// curve per beta, over `samples` equally spaced points in [lo, hi].
std::vector<CurvePoint> curve_data(const std::vector<BetaParamd>& betas,
                                   double lo, double hi, int samples,
                                   double ref = 1.0,
                                   CurveOrder order = CurveOrder::PointFirst);

/// Writes curve samples as CSV with header beta,convention,point,value; the
/// convention column records how each beta is to be read.
void save_curve(const std::vector<CurvePoint>& points,
                const std::filesystem::path& path);

std::string convention_name(Convention c);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_shortest(double v);

/// Stable text tag for a divergence spec: "std:<b>"/"flip:<b>" for bare
/// betas, "<family>@std:<b>"/"<family>@flip:<b>" for generators.
std::string divergence_tag(const DivergenceSpecd& d);

std::string algorithm_name(nmf::Algorithm a);

}  // namespace betanmf::io
