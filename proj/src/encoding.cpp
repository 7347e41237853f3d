#include "tdd/encoding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tdd/errors.hpp"
#include "tdd/rng.hpp"

namespace tdd {

PcaModel pca_fit(const SampleMatrix& samples, int out_dim) {
  const int n = samples.rows, d = samples.cols;
  if (out_dim < 1 || out_dim > d)
    throw std::invalid_argument("pca_fit: out_dim must be in [1, input dim]");
  if (n < out_dim)
    throw std::invalid_argument("pca_fit: need at least out_dim samples");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) mean(c) += samples.row(r)[c];
  mean /= n;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd centered(d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) centered(c) = samples.row(r)[c] - mean(c);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0);
  }
  cov /= std::max(1, n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      cov.selfadjointView<Eigen::Lower>());
  if (solver.info() != Eigen::Success)
    throw InternalError("pca_fit: eigendecomposition failed");

  PcaModel model;
  model.in_dim = d;
  model.out_dim = out_dim;
  model.mean.resize(d);
  for (int c = 0; c < d; ++c) model.mean[c] = static_cast<float>(mean(c));
  model.basis.resize(static_cast<std::size_t>(d) * out_dim);
  model.eigenvalues.resize(out_dim);

  for (int j = 0; j < out_dim; ++j) {
    const int src = d - 1 - j;  // eigenvalues ascend in Eigen's solver
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    // Sign convention: largest-magnitude entry positive.
    int arg = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0.0) v = -v;
    for (int i = 0; i < d; ++i)
      model.basis[static_cast<std::size_t>(j) * d + i] = static_cast<float>(v(i));
    const double ev = solver.eigenvalues()(src);
    model.eigenvalues[j] = static_cast<float>(ev);
    if (ev < 1e-12) ++model.low_rank_count;
  }
  return model;
}

std::vector<float> pca_transform(const PcaModel& model, std::span<const float> x) {
  if (static_cast<int>(x.size()) != model.in_dim)
    throw std::invalid_argument("pca_transform: dimension mismatch");
  std::vector<float> out(model.out_dim);
  for (int j = 0; j < model.out_dim; ++j) {
    const float* col = model.basis.data() + static_cast<std::size_t>(j) * model.in_dim;
    double acc = 0.0;
    for (int i = 0; i < model.in_dim; ++i)
      acc += static_cast<double>(col[i]) * (static_cast<double>(x[i]) - model.mean[i]);
    out[j] = static_cast<float>(acc);
  }
  return out;
}

namespace {

/// Seeded k-means++ start plus a few Lloyd rounds; all arithmetic double.
std::vector<double> kmeans_init(const SampleMatrix& samples, int K, Rng& rng) {
  const int n = samples.rows, d = samples.cols;
  std::vector<double> centers(static_cast<std::size_t>(K) * d);
  const auto copy_center = [&](int k, int row) {
    for (int c = 0; c < d; ++c) centers[static_cast<std::size_t>(k) * d + c] = samples.row(row)[c];
  };
  const auto dist2 = [&](int row, int k) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
      const double diff = samples.row(row)[c] - centers[static_cast<std::size_t>(k) * d + c];
      acc += diff * diff;
    }
    return acc;
  };

  copy_center(0, static_cast<int>(rng.uniform_index(n)));
  std::vector<double> best(n, std::numeric_limits<double>::max());
  for (int k = 1; k < K; ++k) {
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
      best[r] = std::min(best[r], dist2(r, k - 1));
      total += best[r];
    }
    int pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (int r = 0; r < n; ++r) {
        cum += best[r];
        if (cum >= u) {
          pick = r;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_index(n));
    }
    copy_center(k, pick);
  }

  std::vector<int> assign(n, 0);
  for (int round = 0; round < 5; ++round) {
    for (int r = 0; r < n; ++r) {
      double bestd = std::numeric_limits<double>::max();
      for (int k = 0; k < K; ++k) {
        const double dd = dist2(r, k);
        if (dd < bestd) {
          bestd = dd;
          assign[r] = k;
        }
      }
    }
    std::vector<double> sums(static_cast<std::size_t>(K) * d, 0.0);
    std::vector<int> counts(K, 0);
    for (int r = 0; r < n; ++r) {
      ++counts[assign[r]];
      for (int c = 0; c < d; ++c)
        sums[static_cast<std::size_t>(assign[r]) * d + c] += samples.row(r)[c];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[k] == 0) continue;  // keep the previous center
      for (int c = 0; c < d; ++c)
        centers[static_cast<std::size_t>(k) * d + c] =
            sums[static_cast<std::size_t>(k) * d + c] / counts[k];
    }
  }
  return centers;
}

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Per-sample posterior responsibilities and log-likelihood contribution.
double responsibilities(const float* x, int d, int K,
                        const std::vector<double>& log_weight,
                        const std::vector<double>& mean,
                        const std::vector<double>& var,
                        const std::vector<double>& log_norm,
                        std::vector<double>& gamma) {
  double maxlog = -std::numeric_limits<double>::max();
  for (int k = 0; k < K; ++k) {
    double quad = 0.0;
    const double* mu = mean.data() + static_cast<std::size_t>(k) * d;
    const double* sg = var.data() + static_cast<std::size_t>(k) * d;
    for (int c = 0; c < d; ++c) {
      const double diff = x[c] - mu[c];
      quad += diff * diff / sg[c];
    }
    gamma[k] = log_weight[k] + log_norm[k] - 0.5 * quad;
    maxlog = std::max(maxlog, gamma[k]);
  }
  double sum = 0.0;
  for (int k = 0; k < K; ++k) sum += std::exp(gamma[k] - maxlog);
  const double log_px = maxlog + std::log(sum);
  for (int k = 0; k < K; ++k) gamma[k] = std::exp(gamma[k] - log_px);
  return log_px;
}

}  // namespace

GmmModel gmm_fit(const SampleMatrix& samples, int K, std::uint64_t seed,
                 GmmFitInfo* info) {
  const int n = samples.rows, d = samples.cols;
  if (K < 1) throw std::invalid_argument("gmm_fit: K must be >= 1");
  if (n < K) throw std::invalid_argument("gmm_fit: fewer samples than mixtures");

  // Global per-feature variance fixes the floor.
  std::vector<double> gmean(d, 0.0), gvar(d, 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) gmean[c] += samples.row(r)[c];
  for (int c = 0; c < d; ++c) gmean[c] /= n;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) {
      const double diff = samples.row(r)[c] - gmean[c];
      gvar[c] += diff * diff;
    }
  double mean_var = 0.0;
  for (int c = 0; c < d; ++c) {
    gvar[c] /= n;
    mean_var += gvar[c];
  }
  mean_var /= d;
  const double var_floor = std::max(1e-4 * mean_var, 1e-10);
  if (info) info->variance_floor = var_floor;

  Rng rng(seed);
  std::vector<double> mean = kmeans_init(samples, K, rng);
  std::vector<double> var(static_cast<std::size_t>(K) * d);
  std::vector<double> weight(K, 1.0 / K);
  for (int k = 0; k < K; ++k)
    for (int c = 0; c < d; ++c)
      var[static_cast<std::size_t>(k) * d + c] = std::max(gvar[c], var_floor);

  std::vector<double> log_weight(K), log_norm(K), gamma(K);
  std::vector<double> acc_w(K), acc_mean(static_cast<std::size_t>(K) * d),
      acc_var(static_cast<std::size_t>(K) * d);

  double prev_ll = -std::numeric_limits<double>::max();
  for (int iter = 0; iter < 100; ++iter) {
    for (int k = 0; k < K; ++k) {
      log_weight[k] = std::log(weight[k]);
      double logdet = 0.0;
      for (int c = 0; c < d; ++c)
        logdet += std::log(var[static_cast<std::size_t>(k) * d + c]);
      log_norm[k] = -0.5 * (d * kLog2Pi + logdet);
    }

    std::fill(acc_w.begin(), acc_w.end(), 0.0);
    std::fill(acc_mean.begin(), acc_mean.end(), 0.0);
    std::fill(acc_var.begin(), acc_var.end(), 0.0);
    double ll = 0.0;
    for (int r = 0; r < n; ++r) {
      const float* x = samples.row(r);
      ll += responsibilities(x, d, K, log_weight, mean, var, log_norm, gamma);
      for (int k = 0; k < K; ++k) {
        const double g = gamma[k];
        if (g <= 0.0) continue;
        acc_w[k] += g;
        double* am = acc_mean.data() + static_cast<std::size_t>(k) * d;
        double* av = acc_var.data() + static_cast<std::size_t>(k) * d;
        for (int c = 0; c < d; ++c) {
          am[c] += g * x[c];
          av[c] += g * x[c] * x[c];
        }
      }
    }
    ll /= n;
    if (info) info->log_likelihood.push_back(ll);

    // M step.
    for (int k = 0; k < K; ++k) {
      const double wk = std::max(acc_w[k], 1e-10);
      weight[k] = wk / n;
      double* mu = mean.data() + static_cast<std::size_t>(k) * d;
      double* sg = var.data() + static_cast<std::size_t>(k) * d;
      const double* am = acc_mean.data() + static_cast<std::size_t>(k) * d;
      const double* av = acc_var.data() + static_cast<std::size_t>(k) * d;
      for (int c = 0; c < d; ++c) {
        mu[c] = am[c] / wk;
        sg[c] = std::max(av[c] / wk - mu[c] * mu[c], var_floor);
      }
    }
    double wsum = 0.0;
    for (int k = 0; k < K; ++k) wsum += weight[k];
    for (int k = 0; k < K; ++k) weight[k] /= wsum;

    if (iter > 0 && std::abs(ll - prev_ll) < 1e-5 * std::abs(prev_ll)) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;
  }

  GmmModel model;
  model.mixtures = K;
  model.dim = d;
  model.weights.resize(K);
  model.means.resize(static_cast<std::size_t>(K) * d);
  model.variances.resize(static_cast<std::size_t>(K) * d);
  for (int k = 0; k < K; ++k) {
    model.weights[k] = static_cast<float>(weight[k]);
    for (int c = 0; c < d; ++c) {
      model.means[static_cast<std::size_t>(k) * d + c] =
          static_cast<float>(mean[static_cast<std::size_t>(k) * d + c]);
      model.variances[static_cast<std::size_t>(k) * d + c] =
          static_cast<float>(var[static_cast<std::size_t>(k) * d + c]);
    }
  }
  return model;
}

double gmm_log_likelihood(const GmmModel& model, const SampleMatrix& samples) {
  const int K = model.mixtures, d = model.dim;
  if (samples.cols != d)
    throw std::invalid_argument("gmm_log_likelihood: dimension mismatch");
  std::vector<double> log_weight(K), log_norm(K), gamma(K);
  std::vector<double> mean(model.means.begin(), model.means.end());
  std::vector<double> var(model.variances.begin(), model.variances.end());
  for (int k = 0; k < K; ++k) {
    log_weight[k] = std::log(static_cast<double>(model.weights[k]));
    double logdet = 0.0;
    for (int c = 0; c < d; ++c)
      logdet += std::log(var[static_cast<std::size_t>(k) * d + c]);
    log_norm[k] = -0.5 * (d * kLog2Pi + logdet);
  }
  double ll = 0.0;
  for (int r = 0; r < samples.rows; ++r)
    ll += responsibilities(samples.row(r), d, K, log_weight, mean, var, log_norm, gamma);
  return ll / std::max(1, samples.rows);
}

FisherVector fisher_encode(const GmmModel& model, const SampleMatrix& descriptors,
                           bool improved) {
  const int K = model.mixtures, d = model.dim;
  const std::size_t len = 2ull * K * d;
  FisherVector fv;
  fv.values.assign(len, 0.0f);
  if (descriptors.rows == 0) {
    fv.from_empty = true;
    fv.normalized = true;
    return fv;
  }
  if (descriptors.cols != d)
    throw std::invalid_argument("fisher_encode: dimension mismatch");

  std::vector<double> log_weight(K), log_norm(K), gamma(K);
  std::vector<double> mean(model.means.begin(), model.means.end());
  std::vector<double> var(model.variances.begin(), model.variances.end());
  std::vector<double> sigma(static_cast<std::size_t>(K) * d);
  for (int k = 0; k < K; ++k) {
    log_weight[k] = std::log(static_cast<double>(model.weights[k]));
    double logdet = 0.0;
    for (int c = 0; c < d; ++c) {
      const std::size_t i = static_cast<std::size_t>(k) * d + c;
      logdet += std::log(var[i]);
      sigma[i] = std::sqrt(var[i]);
    }
    log_norm[k] = -0.5 * (d * kLog2Pi + logdet);
  }

  std::vector<double> g_mean(static_cast<std::size_t>(K) * d, 0.0);
  std::vector<double> g_var(static_cast<std::size_t>(K) * d, 0.0);
  const int T = descriptors.rows;
  for (int r = 0; r < T; ++r) {
    const float* x = descriptors.row(r);
    responsibilities(x, d, K, log_weight, mean, var, log_norm, gamma);
    for (int k = 0; k < K; ++k) {
      const double g = gamma[k];
      if (g <= 0.0) continue;
      const std::size_t base = static_cast<std::size_t>(k) * d;
      for (int c = 0; c < d; ++c) {
        const double u = (x[c] - mean[base + c]) / sigma[base + c];
        g_mean[base + c] += g * u;
        g_var[base + c] += g * (u * u - 1.0);
      }
    }
  }

  for (int k = 0; k < K; ++k) {
    const double wk = model.weights[k];
    const double scale_mean = 1.0 / (T * std::sqrt(wk));
    const double scale_var = 1.0 / (T * std::sqrt(2.0 * wk));
    const std::size_t base = static_cast<std::size_t>(k) * d;
    for (int c = 0; c < d; ++c) {
      fv.values[base + c] = static_cast<float>(g_mean[base + c] * scale_mean);
      fv.values[static_cast<std::size_t>(K) * d + base + c] =
          static_cast<float>(g_var[base + c] * scale_var);
    }
  }

  if (improved) {
    for (float& v : fv.values) {
      const double s = std::sqrt(std::abs(static_cast<double>(v)));
      v = static_cast<float>(v < 0.0f ? -s : s);
    }
    double norm2 = 0.0;
    for (float v : fv.values) norm2 += static_cast<double>(v) * v;
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (float& v : fv.values) v = static_cast<float>(v * inv);
    }
    fv.normalized = true;
  }
  return fv;
}

FisherVector fuse(const std::vector<FisherVector>& fvs) {
  if (fvs.empty()) throw std::invalid_argument("fuse: no inputs");
  FisherVector out;
  for (const FisherVector& fv : fvs) {
    if (!fv.normalized)
      throw std::invalid_argument("fuse: inputs must be normalized");
    out.values.insert(out.values.end(), fv.values.begin(), fv.values.end());
    out.from_empty = out.from_empty || fv.from_empty;
  }
  double norm2 = 0.0;
  for (float v : out.values) norm2 += static_cast<double>(v) * v;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (float& v : out.values) v = static_cast<float>(v * inv);
  }
  out.normalized = true;
  return out;
}

namespace {

/// Liblinear-style dual coordinate descent for the binary L1-hinge
/// problem; w includes an augmented bias coordinate.
void train_binary(const SampleMatrix& x, const std::vector<signed char>& y,
                  double C, Rng& rng, std::vector<double>& w) {
  const int n = x.rows, d = x.cols;
  w.assign(d + 1, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qii(n);
  for (int r = 0; r < n; ++r) {
    double q = 1.0;  // bias feature
    const float* row = x.row(r);
    for (int c = 0; c < d; ++c) q += static_cast<double>(row[c]) * row[c];
    qii[r] = q;
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int max_epochs = 1000;
  const double eps = 1e-3;

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    // Seeded Fisher-Yates shuffle.
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_index(i + 1)]);

    double max_pg = 0.0;
    for (int idx : order) {
      const float* row = x.row(idx);
      double g = w[d];  // bias
      for (int c = 0; c < d; ++c) g += w[c] * row[c];
      g = g * y[idx] - 1.0;

      double pg = g;
      if (alpha[idx] <= 0.0)
        pg = std::min(g, 0.0);
      else if (alpha[idx] >= C)
        pg = std::max(g, 0.0);
      max_pg = std::max(max_pg, std::abs(pg));
      if (std::abs(pg) < 1e-12) continue;

      const double old = alpha[idx];
      alpha[idx] = std::min(std::max(old - g / qii[idx], 0.0), C);
      const double delta = (alpha[idx] - old) * y[idx];
      if (delta == 0.0) continue;
      for (int c = 0; c < d; ++c) w[c] += delta * row[c];
      w[d] += delta;
    }
    if (max_pg < eps) break;
  }
}

}  // namespace

LinearModel svm_train(const SampleMatrix& features, const std::vector<int>& labels,
                      float C, std::uint64_t seed) {
  const int n = features.rows, d = features.cols;
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("svm_train: label count mismatch");
  if (n < 1 || d < 1) throw std::invalid_argument("svm_train: empty problem");
  int classes = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("svm_train: negative label");
    classes = std::max(classes, l + 1);
  }
  std::vector<bool> seen(classes, false);
  for (int l : labels) seen[l] = true;
  if (classes < 2 || std::count(seen.begin(), seen.end(), true) < 2)
    throw std::invalid_argument("svm_train: need at least two classes");
  if (!(C > 0.0f)) throw std::invalid_argument("svm_train: C must be > 0");

  LinearModel model;
  model.dim = d;
  model.classes = classes;
  model.C = C;
  model.weights.resize(static_cast<std::size_t>(classes) * d);
  model.biases.resize(classes);

  std::vector<signed char> y(n);
  std::vector<double> w;
  for (int cls = 0; cls < classes; ++cls) {
    for (int r = 0; r < n; ++r) y[r] = labels[r] == cls ? 1 : -1;
    Rng rng(seed + 0x9e3779b9ull * cls);
    train_binary(features, y, C, rng, w);
    for (int c = 0; c < d; ++c)
      model.weights[static_cast<std::size_t>(cls) * d + c] = static_cast<float>(w[c]);
    model.biases[cls] = static_cast<float>(w[d]);
  }
  return model;
}

std::vector<double> svm_scores(const LinearModel& model, std::span<const float> x) {
  if (static_cast<int>(x.size()) != model.dim)
    throw std::invalid_argument("svm_scores: dimension mismatch");
  std::vector<double> scores(model.classes);
  for (int cls = 0; cls < model.classes; ++cls) {
    const float* w = model.weights.data() + static_cast<std::size_t>(cls) * model.dim;
    double acc = model.biases[cls];
    for (int c = 0; c < model.dim; ++c) acc += static_cast<double>(w[c]) * x[c];
    scores[cls] = acc;
  }
  return scores;
}

int svm_predict(const LinearModel& model, std::span<const float> x) {
  const std::vector<double> scores = svm_scores(model, x);
  int best = 0;
  for (int cls = 1; cls < model.classes; ++cls)
    if (scores[cls] > scores[best]) best = cls;
  return best;
}

namespace {

constexpr char kModelMagic[4] = {'T', 'D', 'M', '1'};

void write_container(const std::string& path, const nlohmann::json& header,
                     std::span<const float> payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("model write: cannot open " + path);
  const std::string htext = header.dump();
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  out.write(kModelMagic, 4);
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), hlen);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw DataError("model write: failed for " + path);
}

nlohmann::json read_container(const std::string& path, std::vector<float>& payload,
                              const char* expect_type) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("model read: cannot open " + path);
  const std::streamoff size = in.tellg();
  in.seekg(0);
  char magic[4];
  std::uint32_t hlen = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&hlen), 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw DataError("model read: bad magic in " + path);
  if (static_cast<std::streamoff>(hlen) > size - 8)
    throw DataError("model read: truncated header in " + path);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model read: bad header in " + path + ": " + e.what());
  }
  if (header.value("type", "") != expect_type)
    throw DataError("model read: expected type " + std::string(expect_type) +
                    " in " + path);
  const std::streamoff remaining = size - 8 - hlen;
  if (remaining % 4 != 0)
    throw DataError("model read: ragged payload in " + path);
  payload.resize(static_cast<std::size_t>(remaining / 4));
  in.read(reinterpret_cast<char*>(payload.data()), remaining);
  if (!in) throw DataError("model read: truncated payload in " + path);
  return header;
}

}  // namespace

void save_pca(const PcaModel& model, const std::string& path) {
  nlohmann::json h;
  h["type"] = "pca";
  h["in_dim"] = model.in_dim;
  h["out_dim"] = model.out_dim;
  h["low_rank_count"] = model.low_rank_count;
  std::vector<float> payload;
  payload.insert(payload.end(), model.mean.begin(), model.mean.end());
  payload.insert(payload.end(), model.basis.begin(), model.basis.end());
  payload.insert(payload.end(), model.eigenvalues.begin(), model.eigenvalues.end());
  write_container(path, h, payload);
}

PcaModel load_pca(const std::string& path) {
  std::vector<float> payload;
  const nlohmann::json h = read_container(path, payload, "pca");
  PcaModel m;
  m.in_dim = h.at("in_dim").get<int>();
  m.out_dim = h.at("out_dim").get<int>();
  m.low_rank_count = h.value("low_rank_count", 0);
  const std::size_t want = static_cast<std::size_t>(m.in_dim) +
                           static_cast<std::size_t>(m.in_dim) * m.out_dim + m.out_dim;
  if (payload.size() != want) throw DataError("load_pca: payload size mismatch in " + path);
  auto it = payload.begin();
  m.mean.assign(it, it + m.in_dim);
  it += m.in_dim;
  m.basis.assign(it, it + static_cast<std::size_t>(m.in_dim) * m.out_dim);
  it += static_cast<std::size_t>(m.in_dim) * m.out_dim;
  m.eigenvalues.assign(it, it + m.out_dim);
  return m;
}

void save_gmm(const GmmModel& model, const std::string& path) {
  nlohmann::json h;
  h["type"] = "gmm";
  h["mixtures"] = model.mixtures;
  h["dim"] = model.dim;
  std::vector<float> payload;
  payload.insert(payload.end(), model.weights.begin(), model.weights.end());
  payload.insert(payload.end(), model.means.begin(), model.means.end());
  payload.insert(payload.end(), model.variances.begin(), model.variances.end());
  write_container(path, h, payload);
}

GmmModel load_gmm(const std::string& path) {
  std::vector<float> payload;
  const nlohmann::json h = read_container(path, payload, "gmm");
  GmmModel m;
  m.mixtures = h.at("mixtures").get<int>();
  m.dim = h.at("dim").get<int>();
  const std::size_t kd = static_cast<std::size_t>(m.mixtures) * m.dim;
  if (payload.size() != m.mixtures + 2 * kd)
    throw DataError("load_gmm: payload size mismatch in " + path);
  auto it = payload.begin();
  m.weights.assign(it, it + m.mixtures);
  it += m.mixtures;
  m.means.assign(it, it + kd);
  it += kd;
  m.variances.assign(it, it + kd);
  return m;
}

void save_svm(const LinearModel& model, const std::string& path) {
  nlohmann::json h;
  h["type"] = "svm";
  h["dim"] = model.dim;
  h["classes"] = model.classes;
  h["C"] = model.C;
  std::vector<float> payload;
  payload.insert(payload.end(), model.weights.begin(), model.weights.end());
  payload.insert(payload.end(), model.biases.begin(), model.biases.end());
  write_container(path, h, payload);
}

LinearModel load_svm(const std::string& path) {
  std::vector<float> payload;
  const nlohmann::json h = read_container(path, payload, "svm");
  LinearModel m;
  m.dim = h.at("dim").get<int>();
  m.classes = h.at("classes").get<int>();
  m.C = h.value("C", 100.0f);
  const std::size_t wlen = static_cast<std::size_t>(m.classes) * m.dim;
  if (payload.size() != wlen + m.classes)
    throw DataError("load_svm: payload size mismatch in " + path);
  m.weights.assign(payload.begin(), payload.begin() + wlen);
  m.biases.assign(payload.begin() + wlen, payload.end());
  return m;
}

void save_fisher(const FisherVector& fv, const std::string& path) {
  nlohmann::json h;
  h["type"] = "fv";
  h["normalized"] = fv.normalized;
  h["from_empty"] = fv.from_empty;
  write_container(path, h, fv.values);
}

FisherVector load_fisher(const std::string& path) {
  std::vector<float> payload;
  const nlohmann::json h = read_container(path, payload, "fv");
  FisherVector fv;
  fv.values = std::move(payload);
  fv.normalized = h.value("normalized", false);
  fv.from_empty = h.value("from_empty", false);
  return fv;
}

}  // namespace tdd
