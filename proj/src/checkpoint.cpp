#include "pacoh/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pacoh {

using nlohmann::json;

namespace {

json arch_to_json(const MlpArchitecture& a) {
  return {{"input_dim", a.input_dim}, {"hidden", a.hidden}, {"output_dim", a.output_dim}};
}

MlpArchitecture arch_from_json(const json& j) {
  MlpArchitecture a;
  a.input_dim = j.at("input_dim").get<int>();
  a.hidden = j.at("hidden").get<std::vector<int>>();
  a.output_dim = j.at("output_dim").get<int>();
  a.validate();
  return a;
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Mat matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw ConfigError("checkpoint: matrix row count");
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = data[static_cast<size_t>(r)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError("checkpoint: matrix column count");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<size_t>(c)];
  }
  return m;
}

json vector_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::unique_ptr<MetaModel> ModelDescriptor::build() const {
  if (kind == "gp") return std::make_unique<GpMetaModel>(gp);
  if (kind == "bnn") return std::make_unique<BnnMetaModel>(bnn, prior_log_std_center);
  throw ConfigError("unknown model kind '" + kind + "'");
}

bool ModelDescriptor::operator==(const ModelDescriptor& o) const {
  if (kind != o.kind) return false;
  if (kind == "gp")
    return gp.mean_arch == o.gp.mean_arch && gp.feature_arch == o.gp.feature_arch &&
           gp.noise_variance == o.gp.noise_variance;
  return bnn.arch == o.bnn.arch && bnn.likelihood == o.bnn.likelihood &&
         bnn.noise_prior_mean == o.bnn.noise_prior_mean && bnn.learn_noise == o.bnn.learn_noise &&
         bnn.loss_cap == o.bnn.loss_cap && prior_log_std_center == o.prior_log_std_center;
}

HyperPosteriorApprox canonical(const HyperPosteriorApprox& approx) {
  HyperPosteriorApprox out = approx;
  if (out.method == Method::map) out.method = Method::svgd;
  return out;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json model{{"kind", ckpt.model.kind}};
  if (ckpt.model.kind == "gp") {
    model["mean_arch"] = arch_to_json(ckpt.model.gp.mean_arch);
    model["feature_arch"] = arch_to_json(ckpt.model.gp.feature_arch);
    model["noise_variance"] = ckpt.model.gp.noise_variance;
  } else {
    model["arch"] = arch_to_json(ckpt.model.bnn.arch);
    model["likelihood"] = ckpt.model.bnn.likelihood == Likelihood::regression ? "regression" : "classification";
    model["noise_prior_mean"] = ckpt.model.bnn.noise_prior_mean;
    model["learn_noise"] = ckpt.model.bnn.learn_noise;
    model["loss_cap"] = ckpt.model.bnn.loss_cap;
    model["prior_log_std_center"] = ckpt.model.prior_log_std_center;
  }
  const HyperPosteriorApprox a = canonical(ckpt.approx);
  json approx{{"method", to_string(a.method)}};
  if (a.method == Method::vi) {
    approx["mean"] = vector_to_json(a.vi_mean);
    approx["log_std"] = vector_to_json(a.vi_log_std);
  } else {
    approx["particles"] = matrix_to_json(a.particles);
  }
  json j{{"version", ckpt.version}, {"tool", ckpt.tool},     {"config_hash", ckpt.config_hash},
         {"seed", ckpt.seed},       {"model", model},        {"approx", approx}};
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Checkpoint c;
    c.version = j.at("version").get<int>();
    if (c.version != Checkpoint::kVersion) throw ConfigError("checkpoint: unsupported version");
    c.tool = j.at("tool").get<std::string>();
    c.config_hash = j.at("config_hash").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const json& m = j.at("model");
    c.model.kind = m.at("kind").get<std::string>();
    if (c.model.kind == "gp") {
      c.model.gp.mean_arch = arch_from_json(m.at("mean_arch"));
      c.model.gp.feature_arch = arch_from_json(m.at("feature_arch"));
      c.model.gp.noise_variance = m.at("noise_variance").get<double>();
    } else if (c.model.kind == "bnn") {
      c.model.bnn.arch = arch_from_json(m.at("arch"));
      const auto lik = m.at("likelihood").get<std::string>();
      c.model.bnn.likelihood = lik == "regression" ? Likelihood::regression : Likelihood::classification;
      c.model.bnn.noise_prior_mean = m.at("noise_prior_mean").get<double>();
      c.model.bnn.learn_noise = m.at("learn_noise").get<bool>();
      c.model.bnn.loss_cap = m.at("loss_cap").get<double>();
      c.model.prior_log_std_center = m.at("prior_log_std_center").get<double>();
    } else {
      throw ConfigError("checkpoint: unknown model kind");
    }
    const json& a = j.at("approx");
    c.approx.method = method_from_string(a.at("method").get<std::string>());
    if (c.approx.method == Method::vi) {
      c.approx.vi_mean = vector_from_json(a.at("mean"));
      c.approx.vi_log_std = vector_from_json(a.at("log_std"));
    } else {
      c.approx.particles = matrix_from_json(a.at("particles"));
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace pacoh
