#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gazessl {

// objects x features representation matrix.
struct RepMatrix {
  std::vector<std::string> object_ids;
  Eigen::MatrixXd features;
  bool operator==(const RepMatrix&) const = default;
};

// One row per object (sorted by id): the mean of that object's image feature vectors.
RepMatrix aggregate_object_reps(
    const std::map<std::string, std::vector<Eigen::VectorXd>>& per_image_features);

// Horizontal concatenation of layers sharing the same object order.
RepMatrix concat_layers(std::span<const RepMatrix> reps);

// Linear CKA with column centering:
//   |Yc^T Xc|_F^2 / (|Xc^T Xc|_F |Yc^T Yc|_F)
double linear_cka(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
// Requires identical object_ids.
double linear_cka(const RepMatrix& x, const RepMatrix& y);

// Reorders y's rows to follow x's object order; both must hold the same set of ids.
RepMatrix align_objects(const RepMatrix& reference, const RepMatrix& y);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  double cohens_d = 0.0;
};

// Paired t-test on a - b. All-zero differences give (0, 1, 0); constant non-zero differences
// give t = d = +-inf and p = 0.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);
TTestResult paired_t_test(std::span<const double> diffs);

// I_x(a, b) via the Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};
MeanStd mean_std(std::span<const double> v);

// <stem>.sgrd holds the features (float32), <stem>.json the object ids.
void write_rep_matrix(const std::filesystem::path& stem, const RepMatrix& rep);
RepMatrix read_rep_matrix(const std::filesystem::path& stem);

}  // namespace gazessl
