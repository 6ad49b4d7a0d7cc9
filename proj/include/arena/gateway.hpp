#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arena/errors.hpp"
#include "arena/game.hpp"
#include "arena/hashing.hpp"
#include "arena/strategies.hpp"
#include "arena/text.hpp"

namespace arena {

/// Sampling and transport settings for one decision backend.
struct ProviderConfig {
  std::string provider_id;
  std::string endpoint_url;
  std::string model_id;
  double temperature = 1.0;
  double top_p = 1.0;
  std::optional<int> top_k;
  std::string api_key_env;  // name of the env var holding the key; empty = none
  int max_retries = 3;
  int timeout_ms = 30000;
  int rate_limit_per_min = 600;
  int max_concurrent = 4;  // in-flight request cap per provider

  void validate() const {
    if (temperature < 0) throw ConfigError(provider_id + ": temperature must be >= 0");
    if (top_p <= 0 || top_p > 1) throw ConfigError(provider_id + ": top_p must be in (0,1]");
    if (max_retries < 0) throw ConfigError(provider_id + ": max_retries must be >= 0");
    if (max_concurrent < 1) throw ConfigError(provider_id + ": max_concurrent must be >= 1");
  }
};

/// A parsed agent decision plus its audit trail.
struct Decision {
  int chosen = 0;
  std::string chosen_label;
  std::string raw_reply;
  int attempts = 0;
  int64_t latency_ms = 0;
  std::string provider_id;
};

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

/// Maps a free-text reply onto a strategy index: normalize (trim, strip
/// wrapper punctuation, case-fold, NFC), then exact match, then
/// unique-substring match. Zero or ambiguous hits parse to nothing.
inline std::optional<int> parse_choice(const std::string& reply,
                                       const std::array<std::string, 2>& labels) {
  std::array<std::string, 2> norm;
  for (int i = 0; i < 2; ++i) norm[i] = case_fold(nfc(labels[i]));
  std::string stripped = case_fold(nfc(strip_wrapping(reply)));
  for (int i = 0; i < 2; ++i)
    if (!norm[i].empty() && stripped == norm[i]) return i;

  std::string whole = case_fold(nfc(trim(reply)));
  bool hit0 = !norm[0].empty() && contains(whole, norm[0]);
  bool hit1 = !norm[1].empty() && contains(whole, norm[1]);
  if (hit0 == hit1) return std::nullopt;  // none or both
  return hit0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Clock + rate limiting
// ---------------------------------------------------------------------------

/// Injectable clock so rate limiting and backoff are testable without
/// real waiting.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual int64_t now_ms() = 0;
  virtual void sleep_ms(int64_t ms) = 0;
};

class SystemClock : public Clock {
 public:
  int64_t now_ms() override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
  }
  void sleep_ms(int64_t ms) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
};

inline Clock& system_clock() {
  static SystemClock clock;
  return clock;
}

/// Time stands still: sleeps are no-ops and latencies are zero. Used for
/// offline runs so outputs stay byte-stable.
class FixedClock : public Clock {
 public:
  int64_t now_ms() override { return 0; }
  void sleep_ms(int64_t) override {}
};

/// Sliding-window limiter: at most `limit` sends in any 60 s half-open
/// window. Thread-safe.
class RateLimiter {
 public:
  RateLimiter(int limit_per_min, Clock& clock) : limit_(limit_per_min), clock_(clock) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
      int64_t now = clock_.now_ms();
      while (!sent_.empty() && sent_.front() + 60000 <= now) sent_.pop_front();
      if (static_cast<int>(sent_.size()) < limit_) {
        sent_.push_back(now);
        return;
      }
      int64_t wait = sent_.front() + 60000 - now;
      lock.unlock();
      clock_.sleep_ms(std::max<int64_t>(wait, 1));
      lock.lock();
    }
  }

 private:
  int limit_;
  Clock& clock_;
  std::mutex mutex_;
  std::deque<int64_t> sent_;
};

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

/// Structured context that travels with a decision request. Remote providers
/// see only the prompt; the mock provider decides from the view.
struct DecisionContext {
  PolicyView view;
  std::array<std::string, 2> labels;  // localized, order = strategy index
  uint64_t draw_seed = 0;             // per-instance seed for stochastic mocks
};

/// Unrecoverable provider failure; not retried.
class PermanentProviderError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// Raw reply text for one single-message chat completion.
  /// Throws ProviderError on transport failure.
  virtual std::string complete(const std::string& prompt, const DecisionContext& ctx) = 0;
  virtual bool uses_network() const { return false; }
};

/// Deterministic provider that answers with a scripted policy's localized
/// choice label, or replays a fixed reply list.
class MockProvider : public Provider {
 public:
  explicit MockProvider(ScriptedPolicy policy) : policy_(std::move(policy)) {}
  explicit MockProvider(std::vector<std::string> replies)
      : fixed_(std::move(replies)), use_fixed_(true) {}

  std::string complete(const std::string&, const DecisionContext& ctx) override {
    if (use_fixed_) {
      size_t i = next_fixed_++;
      if (i >= fixed_.size()) throw PermanentProviderError("sequence exhausted");
      return fixed_[i];
    }
    ScriptedPolicy policy = policy_;
    policy.seed = derive_seed(ctx.draw_seed, policy.seed);
    return ctx.labels[decide(policy, ctx.view)];
  }

 private:
  ScriptedPolicy policy_;
  std::vector<std::string> fixed_;
  bool use_fixed_ = false;
  std::atomic<size_t> next_fixed_{0};
};

/// Counts real HTTP attempts; lets tests assert that mock runs never touch
/// the network.
inline std::atomic<uint64_t>& network_attempts() {
  static std::atomic<uint64_t> count{0};
  return count;
}

// ---------------------------------------------------------------------------
// Request log
// ---------------------------------------------------------------------------

/// Verbatim request/reply audit entries. API keys never enter the log; only
/// the env var NAME is recorded.
struct RequestLogEntry {
  std::string provider_id;
  std::string model_id;
  int attempt = 0;
  std::string prompt;
  std::string reply;   // or empty on transport failure
  std::string error;   // transport/parse error text, if any
  int64_t latency_ms = 0;
};

using RequestLogger = std::function<void(const RequestLogEntry&)>;

// ---------------------------------------------------------------------------
// Decision loop
// ---------------------------------------------------------------------------

/// Counting semaphore over real threads (the virtual clock must not be
/// involved: concurrency is bounded even when time stands still).
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int slots) : slots_(slots) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++slots_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int slots_;
};

/// One registered backend: provider + config + its rate limiter and
/// concurrency cap.
struct GatewayEntry {
  std::shared_ptr<Provider> provider;
  ProviderConfig config;
  std::unique_ptr<RateLimiter> limiter;
  std::unique_ptr<ConcurrencyGate> gate;
};

class Gateway {
 public:
  explicit Gateway(Clock& clock = system_clock(), RequestLogger logger = nullptr)
      : clock_(clock), logger_(std::move(logger)) {}

  void add_provider(const ProviderConfig& cfg, std::shared_ptr<Provider> provider) {
    cfg.validate();
    if (provider->uses_network() && !cfg.api_key_env.empty() &&
        std::getenv(cfg.api_key_env.c_str()) == nullptr)
      throw ConfigError("missing API key: environment variable " + cfg.api_key_env + " is not set");
    std::lock_guard<std::mutex> lock(mutex_);
    auto entry = std::make_unique<GatewayEntry>();
    entry->provider = std::move(provider);
    entry->config = cfg;
    entry->limiter = std::make_unique<RateLimiter>(cfg.rate_limit_per_min, clock_);
    entry->gate = std::make_unique<ConcurrencyGate>(cfg.max_concurrent);
    entries_[cfg.provider_id] = std::move(entry);
  }

  bool has_provider(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.count(id) > 0;
  }

  /// Sends the prompt, parses the reply, and retries the identical prompt on
  /// parse or transport failure, up to max_retries extra attempts.
  Decision request_decision(const std::string& provider_id, const std::string& prompt,
                            const DecisionContext& ctx) {
    if (prompt.empty()) throw ValidationError("prompt must be non-empty");
    GatewayEntry* entry = find(provider_id);
    const ProviderConfig& cfg = entry->config;

    Decision decision;
    decision.provider_id = provider_id;
    int64_t start = clock_.now_ms();
    std::string last_error;
    bool got_reply = false;

    for (int attempt = 1; attempt <= cfg.max_retries + 1; ++attempt) {
      entry->limiter->acquire();
      decision.attempts = attempt;
      std::string reply;
      int64_t sent = clock_.now_ms();
      try {
        entry->gate->acquire();
        struct Release {
          ConcurrencyGate* gate;
          ~Release() { gate->release(); }
        } release{entry->gate.get()};
        reply = entry->provider->complete(prompt, ctx);
      } catch (const PermanentProviderError& e) {
        log(cfg, attempt, prompt, "", e.what(), clock_.now_ms() - sent);
        throw;
      } catch (const ProviderError& e) {
        last_error = e.what();
        log(cfg, attempt, prompt, "", e.what(), clock_.now_ms() - sent);
        if (attempt <= cfg.max_retries)
          clock_.sleep_ms(kBackoffBaseMs << (attempt - 1));
        continue;
      }
      got_reply = true;
      decision.raw_reply = reply;
      std::optional<int> chosen = parse_choice(reply, ctx.labels);
      if (chosen.has_value()) {
        decision.chosen = *chosen;
        decision.chosen_label = ctx.labels[*chosen];
        decision.latency_ms = clock_.now_ms() - start;
        log(cfg, attempt, prompt, reply, "", clock_.now_ms() - sent);
        return decision;
      }
      last_error = "no strategy label recognized in reply";
      log(cfg, attempt, prompt, reply, last_error, clock_.now_ms() - sent);
    }
    if (got_reply)
      throw UnparseableDecisionError("unparseable decision from " + provider_id + ": " + last_error);
    throw ProviderError("provider unavailable: " + provider_id + ": " + last_error);
  }

  static constexpr int64_t kBackoffBaseMs = 250;

 private:
  GatewayEntry* find(const std::string& id) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw ConfigError("unknown provider: " + id);
    return it->second.get();
  }

  void log(const ProviderConfig& cfg, int attempt, const std::string& prompt,
           const std::string& reply, const std::string& error, int64_t latency) {
    if (!logger_) return;
    RequestLogEntry e;
    e.provider_id = cfg.provider_id;
    e.model_id = cfg.model_id;
    e.attempt = attempt;
    e.prompt = prompt;
    e.reply = reply;
    e.error = error;
    e.latency_ms = latency;
    logger_(e);
  }

  Clock& clock_;
  RequestLogger logger_;
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<GatewayEntry>> entries_;
};

}  // namespace arena
