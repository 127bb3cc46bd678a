#include "dadin/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dadin/errors.hpp"
#include "dadin/tensor.hpp"

namespace dadin {

void SyntheticConfig::validate() const {
  if (users < 2) throw ConfigError("synthetic data needs at least two users");
  if (!(target_user_fraction > 0.0 && target_user_fraction <= 1.0)) {
    throw ConfigError("target user fraction must lie in (0, 1]");
  }
  if (target_items == 0 || source_items == 0) throw ConfigError("synthetic item counts must be positive");
  if (target_records == 0 || source_records == 0) throw ConfigError("synthetic record counts must be positive");
  if (days == 0) throw ConfigError("synthetic days must be positive");
  if (latent_dim == 0) throw ConfigError("synthetic latent dimension must be positive");
}

namespace {

int quantize(double x, int bins) {
  const double lo = -2.5, hi = 2.5;
  const int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

double dot_scaled(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / std::sqrt(static_cast<double>(a.size()));
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void write_synthetic_dataset(const SyntheticConfig& c, const std::filesystem::path& dir) {
  c.validate();
  std::filesystem::create_directories(dir);
  Rng rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t k = c.latent_dim;
  auto latent = [&] {
    std::vector<double> v(k);
    for (auto& x : v) x = normal(rng);
    return v;
  };

  std::vector<std::vector<double>> users(c.users), target_pref(c.users);
  const double theta = c.rotation_degrees * std::numbers::pi / 180.0;
  for (std::size_t u = 0; u < c.users; ++u) {
    users[u] = latent();
    target_pref[u] = users[u];
    for (std::size_t i = 0; i + 1 < k; i += 2) {
      const double a = users[u][i], b = users[u][i + 1];
      target_pref[u][i] = std::cos(theta) * a - std::sin(theta) * b;
      target_pref[u][i + 1] = std::sin(theta) * a + std::cos(theta) * b;
    }
  }
  std::vector<std::vector<double>> target_items(c.target_items), source_items(c.source_items);
  for (auto& w : target_items) w = latent();
  for (auto& w : source_items) w = latent();

  const auto n_target_users =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.target_user_fraction * static_cast<double>(c.users))));

  // Profile columns are noisy views of the latent coordinates; device is pure noise with gaps.
  std::vector<std::string> profile(c.users);
  for (std::size_t u = 0; u < c.users; ++u) {
    const auto& v = users[u];
    auto coord = [&](std::size_t i) { return v[i % k] + 0.5 * normal(rng); };
    const int gender = coord(0) > 0.0 ? 1 : 0;
    const int age = quantize(coord(1), 6);
    const int occupation = quantize(coord(2), 5);
    const int region = quantize(coord(3), 5);
    const bool missing_device = unit(rng) < 0.05;
    const int device = static_cast<int>(unit(rng) * 4.0);
    profile[u] = std::to_string(gender) + "," + std::to_string(age) + "," + std::to_string(occupation) + "," +
                 std::to_string(region) + "," + (missing_device ? std::string("na_value") : "d" + std::to_string(device));
  }

  auto write_domain = [&](const std::filesystem::path& path, bool target) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    const char* item_col = target ? "ad_id" : "news_id";
    const char* cat_col = target ? "ad_category" : "news_topic";
    os << "user_id,gender,age,occupation,region,device," << item_col << ',' << cat_col << ",click,day\n";
    const auto& items = target ? target_items : source_items;
    const std::size_t n_records = target ? c.target_records : c.source_records;
    const std::size_t n_users = target ? n_target_users : c.users;
    std::uniform_int_distribution<std::size_t> pick_user(0, n_users - 1);
    std::uniform_int_distribution<std::size_t> pick_item(0, items.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_day(1, c.days);
    for (std::size_t r = 0; r < n_records; ++r) {
      const auto u = pick_user(rng);
      const auto j = pick_item(rng);
      const auto& pref = target ? target_pref[u] : users[u];
      const double p = logistic(c.signal * dot_scaled(pref, items[j]) + (target ? c.target_bias : c.source_bias));
      const int click = unit(rng) < p ? 1 : 0;
      os << 'u' << u << ',' << profile[u] << ',' << (target ? 'a' : 'n') << j << ",c" << quantize(items[j][0], 6) << ','
         << click << ',' << pick_day(rng) << '\n';
    }
  };
  write_domain(dir / "target.csv", true);
  write_domain(dir / "source.csv", false);

  std::ofstream schema(dir / "schema.txt");
  if (!schema) throw IoError("cannot write " + (dir / "schema.txt").string());
  schema << "user_id = user_key\n"
            "gender = profile\n"
            "age = profile\n"
            "occupation = profile\n"
            "region = profile\n"
            "device = profile\n"
            "click = label\n"
            "day = timestamp\n"
            "[target]\n"
            "ad_id = item\n"
            "ad_category = item\n"
            "[source]\n"
            "news_id = item\n"
            "news_topic = item\n";
}

}  // namespace dadin
