#include <algorithm>
#include <fstream>

#include "dadin/errors.hpp"
#include "dadin/experiments.hpp"

namespace dadin {

void ToyConfig::validate() const {
  moons.validate();
  if (widths.empty()) throw ConfigError("toy-widths needs at least one layer");
  if (epochs == 0) throw ConfigError("toy-epochs must be positive");
  if (batch_size == 0) throw ConfigError("toy batch size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("toy-learning-rate must be positive");
  if (grid < 2) throw ConfigError("toy-grid must be at least 2");
  weights.validate();
}

namespace {

ModelConfig toy_model_config(const ToyConfig& c) {
  ModelConfig m;
  m.input = InputKind::kDense;
  m.dense_input_dim = 2;
  m.tower_widths = c.widths;
  m.label_hidden = c.label_hidden;
  m.dropout = c.dropout;
  m.threshold = c.threshold;
  m.validate();
  return m;
}

std::vector<Instance> grid_points(const ToyResult& r, std::size_t grid) {
  std::vector<Instance> pts;
  pts.reserve(grid * grid);
  for (std::size_t iy = 0; iy < grid; ++iy) {
    const double y = r.grid_y0 + (r.grid_y1 - r.grid_y0) * static_cast<double>(iy) / static_cast<double>(grid - 1);
    for (std::size_t ix = 0; ix < grid; ++ix) {
      const double x = r.grid_x0 + (r.grid_x1 - r.grid_x0) * static_cast<double>(ix) / static_cast<double>(grid - 1);
      Instance inst;
      inst.dense = {x, y};
      pts.push_back(std::move(inst));
    }
  }
  return pts;
}

double accuracy(std::span<const double> scores, std::span<const double> labels) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) hit += ((scores[i] >= 0.5) == (labels[i] != 0.0));
  return static_cast<double>(hit) / static_cast<double>(scores.size());
}

ToyModelResult fit_toy(const ToyConfig& config, const LossWeights& weights, const ToyResult& r,
                       std::uint64_t seed) {
  Rng rng(seed);
  DadinModel model(toy_model_config(config), rng);
  std::vector<Instance> train_set = r.data.source;
  train_set.insert(train_set.end(), r.data.target_labeled.begin(), r.data.target_labeled.end());
  train_set.insert(train_set.end(), r.data.target_unlabeled.begin(), r.data.target_unlabeled.end());

  TrainConfig tc;
  tc.batch_size = config.batch_size;
  tc.epochs = config.epochs;
  tc.optimizer.learning_rate = config.learning_rate;
  train(model, train_set, {}, tc, weights, rng);

  ToyModelResult out;
  const auto target = r.data.target_all();
  out.target_scores = predict(model, target);
  std::vector<double> target_labels;
  for (const auto& inst : target) target_labels.push_back(inst.y);
  out.target_accuracy = accuracy(out.target_scores, target_labels);

  std::vector<Instance> both = r.data.source;
  both.insert(both.end(), target.begin(), target.end());
  out.states = collect_states(model, both);
  std::vector<double> domains;
  for (const auto& inst : both) domains.push_back(inst.domain == kTargetDomain ? 1.0 : 0.0);
  out.domain_accuracy = accuracy(out.states.d_hat, domains);

  const auto mesh = grid_points(r, config.grid);
  const auto mesh_states = collect_states(model, mesh);
  out.grid_scores = mesh_states.y_hat;
  out.grid_domain = mesh_states.d_hat;
  return out;
}

}  // namespace

ToyResult run_toy(const ToyConfig& config, std::uint64_t seed) {
  config.validate();
  ToyResult r;
  auto moons = config.moons;
  moons.seed = seed;
  r.data = generate_moons(moons);

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto extend = [&](const std::vector<Instance>& pts) {
    for (const auto& p : pts) {
      x0 = std::min(x0, p.dense[0]);
      x1 = std::max(x1, p.dense[0]);
      y0 = std::min(y0, p.dense[1]);
      y1 = std::max(y1, p.dense[1]);
    }
  };
  extend(r.data.source);
  extend(r.data.target_labeled);
  extend(r.data.target_unlabeled);
  const double px = 0.2 * (x1 - x0), py = 0.2 * (y1 - y0);
  r.grid_x0 = x0 - px;
  r.grid_x1 = x1 + px;
  r.grid_y0 = y0 - py;
  r.grid_y1 = y1 + py;

  // Both networks start from the same initial parameters.
  const std::uint64_t model_seed = seed * 0x9E3779B97F4A7C15ULL + 1;
  r.dadin = fit_toy(config, config.weights, r, model_seed);
  LossWeights plain = config.weights;
  plain.lambda2 = 0.0;
  plain.lambda3 = 0.0;
  r.baseline = fit_toy(config, plain, r, model_seed);

  const auto& s = r.dadin.states;
  r.pca_spec = pca_project(s.h_spec, s.n, s.dim);
  r.pca_da = pca_project(s.h_da, s.n, s.dim);
  std::vector<std::size_t> source_pos, target_pos;
  const std::size_t n_source = r.data.source.size();
  const auto target = r.data.target_all();
  for (std::size_t i = 0; i < n_source; ++i) {
    if (r.data.source[i].y != 0.0) source_pos.push_back(i);
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i].y != 0.0) target_pos.push_back(n_source + i);
  }
  r.centroid_distance_spec = distance(centroid(r.pca_spec, source_pos), centroid(r.pca_spec, target_pos));
  r.centroid_distance_da = distance(centroid(r.pca_da, source_pos), centroid(r.pca_da, target_pos));
  return r;
}

void export_toy(const ToyResult& r, const ToyConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw IoError("cannot write " + (dir / name).string());
    os.precision(10);
    return os;
  };
  {
    auto os = open("toy_points.tsv");
    os << "x\ty\tdomain\tlabel\tlabeled\tdadin_score\tbaseline_score\n";
    for (const auto& p : r.data.source) os << p.dense[0] << '\t' << p.dense[1] << "\t0\t" << p.y << "\t1\t\t\n";
    const auto target = r.data.target_all();
    for (std::size_t i = 0; i < target.size(); ++i) {
      const auto& p = target[i];
      os << p.dense[0] << '\t' << p.dense[1] << "\t1\t" << p.y << '\t' << (p.labeled ? 1 : 0) << '\t'
         << r.dadin.target_scores[i] << '\t' << r.baseline.target_scores[i] << '\n';
    }
  }
  {
    auto os = open("toy_grid.tsv");
    os << "x\ty\tdadin_score\tbaseline_score\tdadin_domain\n";
    const std::size_t g = config.grid;
    for (std::size_t iy = 0; iy < g; ++iy) {
      for (std::size_t ix = 0; ix < g; ++ix) {
        const double x = r.grid_x0 + (r.grid_x1 - r.grid_x0) * static_cast<double>(ix) / static_cast<double>(g - 1);
        const double y = r.grid_y0 + (r.grid_y1 - r.grid_y0) * static_cast<double>(iy) / static_cast<double>(g - 1);
        const auto k = iy * g + ix;
        os << x << '\t' << y << '\t' << r.dadin.grid_scores[k] << '\t' << r.baseline.grid_scores[k] << '\t'
           << r.dadin.grid_domain[k] << '\n';
      }
    }
  }
  {
    auto os = open("toy_pca.tsv");
    os << "x\ty\tdomain\tlabel\tstage\n";
    const auto target = r.data.target_all();
    auto label = [&](std::size_t i) { return i < r.data.source.size() ? r.data.source[i].y : target[i - r.data.source.size()].y; };
    auto domain = [&](std::size_t i) { return i < r.data.source.size() ? 0 : 1; };
    for (const auto* proj : {&r.pca_spec, &r.pca_da}) {
      const char* stage = proj == &r.pca_spec ? "spec" : "DA";
      for (std::size_t i = 0; i < proj->n; ++i) {
        os << proj->x(i) << '\t' << proj->y(i) << '\t' << domain(i) << '\t' << label(i) << '\t' << stage << '\n';
      }
    }
  }
}

}  // namespace dadin
