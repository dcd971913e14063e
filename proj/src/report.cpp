#include "turnsample/report.hpp"

#include <atomic>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace turnsample {

std::string RunReport::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "sampler: " << sampler << "\n";
  out << "seed: " << seed << "\n";
  out << "trials: " << trials << "  successes: " << successes << "\n";
  out << "fail_rate: " << fail_rate << " (threshold " << fail_threshold << ")\n";
  out << "tv_distance: " << tv << " (threshold " << tv_threshold << ")\n";
  out << "clamp_events: " << clamp_events << "  clip_events: " << clip_events << "\n";
  out << "empirical:";
  for (double p : empirical) out << ' ' << p;
  out << "\nexact:";
  for (double p : exact) out << ' ' << p;
  out << "\nconfig: " << config_echo << "\n";
  out << "result: " << (thresholds_pass ? "PASS" : "FAIL") << "\n";
  out << "--- timing (informational) ---\n";
  out << "wall_seconds: " << wall_seconds << "  per_update_ns: " << per_update_ns << "\n";
  return out.str();
}

std::string RunReport::to_json() const {
  nlohmann::json j;
  j["sampler"] = sampler;
  j["seed"] = seed;
  j["trials"] = trials;
  j["successes"] = successes;
  j["fail_rate"] = fail_rate;
  j["fail_threshold"] = fail_threshold;
  j["tv_distance"] = tv;
  j["tv_threshold"] = tv_threshold;
  j["clamp_events"] = clamp_events;
  j["clip_events"] = clip_events;
  j["empirical"] = empirical;
  j["exact"] = exact;
  if (!config_echo.empty()) {
    j["config"] = nlohmann::json::parse(config_echo, nullptr, false);
  }
  j["pass"] = thresholds_pass;
  j["timing"] = {{"wall_seconds", wall_seconds}, {"per_update_ns", per_update_ns}};
  return j.dump(2);
}

void parallel_trials(std::uint64_t trials, std::uint32_t threads,
                     const std::function<void(std::uint64_t)>& job) {
  if (threads <= 1) {
    for (std::uint64_t t = 0; t < trials; ++t) job(t);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::uint32_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::uint64_t t = next.fetch_add(1);
        if (t >= trials) return;
        job(t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace turnsample
