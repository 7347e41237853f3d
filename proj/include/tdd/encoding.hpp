#ifndef TDD_ENCODING_HPP
#define TDD_ENCODING_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tdd {

/// Row-major sample matrix: rows samples of cols features.
struct SampleMatrix {
  std::vector<float> data;
  int rows = 0;
  int cols = 0;

  const float* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  void push_row(std::span<const float> v) {
    data.insert(data.end(), v.begin(), v.end());
    ++rows;
  }
};

/// PCA projection fitted from sample covariance. basis is column-major:
/// column j (the j-th principal direction, descending eigenvalue) occupies
/// basis[j * in_dim .. j * in_dim + in_dim). Each column's
/// largest-magnitude entry is made positive to pin the sign.
struct PcaModel {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<float> mean;
  std::vector<float> basis;
  std::vector<float> eigenvalues;  // descending, length out_dim
  int low_rank_count = 0;          // retained eigenvalues below 1e-12
};

/// Fit on >= out_dim samples; throws std::invalid_argument otherwise or
/// when out_dim exceeds the input dimension. Rank deficiency below
/// out_dim is not an error; it is reported via low_rank_count.
PcaModel pca_fit(const SampleMatrix& samples, int out_dim);
std::vector<float> pca_transform(const PcaModel& model, std::span<const float> x);

/// Diagonal-covariance Gaussian mixture.
struct GmmModel {
  int mixtures = 0;  // K
  int dim = 0;       // D
  std::vector<float> weights;    // K, positive, sums to 1
  std::vector<float> means;      // K * D
  std::vector<float> variances;  // K * D, floored
};

struct GmmFitInfo {
  std::vector<double> log_likelihood;  // one entry per EM iteration
  double variance_floor = 0.0;
};

/// EM fit from a k-means++ start (a few Lloyd rounds, then EM to
/// relative improvement < 1e-5 or 100 iterations). Deterministic per
/// seed. The per-dimension variance floor is 1e-4 times the mean feature
/// variance. Throws std::invalid_argument with fewer samples than K.
GmmModel gmm_fit(const SampleMatrix& samples, int K, std::uint64_t seed,
                 GmmFitInfo* info = nullptr);

/// Average log-likelihood of samples under the model (natural log).
double gmm_log_likelihood(const GmmModel& model, const SampleMatrix& samples);

struct FisherVector {
  std::vector<float> values;  // 2 K D
  bool normalized = false;
  bool from_empty = false;
};

/// Fisher vector of a descriptor set under the GMM: per mixture, the
/// posterior-weighted first- and second-order blocks
///   G_mu[k]    = 1/(T sqrt(w_k))   * sum_t g_tk (x - mu_k)/sigma_k
///   G_sigma[k] = 1/(T sqrt(2 w_k)) * sum_t g_tk ((x - mu_k)^2/sigma_k^2 - 1)
/// laid out as all mean blocks then all variance blocks. With improved =
/// true (the default) the vector is signed-square-rooted and
/// L2-normalized. An empty descriptor set returns the flagged zero vector.
FisherVector fisher_encode(const GmmModel& model, const SampleMatrix& descriptors,
                           bool improved = true);

/// Concatenation in the caller's declared order, re-L2-normalized.
/// Throws std::invalid_argument if any input is not normalized.
FisherVector fuse(const std::vector<FisherVector>& fvs);

/// One-vs-rest linear classifier, L2-regularized hinge loss.
struct LinearModel {
  int dim = 0;
  int classes = 0;
  std::vector<float> weights;  // classes * dim
  std::vector<float> biases;   // classes
  float C = 100.0f;
};

/// Dual coordinate descent per class with seeded epoch shuffles; training
/// is deterministic for a fixed (data, labels, C, seed). Labels are
/// 0-based class indices. Throws std::invalid_argument for fewer than two
/// classes or inconsistent dimensions.
LinearModel svm_train(const SampleMatrix& features, const std::vector<int>& labels,
                      float C, std::uint64_t seed = 1);

std::vector<double> svm_scores(const LinearModel& model, std::span<const float> x);

/// argmax of scores; ties break to the lowest class index.
int svm_predict(const LinearModel& model, std::span<const float> x);

/// Versioned binary container shared by all models: magic "TDM1", u32
/// little-endian JSON header length, JSON header (type + dims +
/// hyperparameters), f32 little-endian payload.
void save_pca(const PcaModel& model, const std::string& path);
PcaModel load_pca(const std::string& path);
void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);
void save_svm(const LinearModel& model, const std::string& path);
LinearModel load_svm(const std::string& path);
void save_fisher(const FisherVector& fv, const std::string& path);
FisherVector load_fisher(const std::string& path);

}  // namespace tdd

#endif  // TDD_ENCODING_HPP
