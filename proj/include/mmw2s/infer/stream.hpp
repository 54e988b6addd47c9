#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mmw2s/infer/predict.hpp"

namespace mmw2s {

struct DecisionEvent {
  std::size_t i = 0;
  double t = 0.0;
  ResponseLabel label = ResponseLabel::kSilence;
  std::array<double, kNumLabels> probs{};
  double latency_ms = 0.0;
};

inline nlohmann::json event_to_json(const DecisionEvent& e, bool with_latency = true) {
  nlohmann::json j = {{"i", e.i}, {"t", e.t}, {"label", label_name(e.label)}, {"probs", e.probs}};
  if (with_latency) j["latency_ms"] = e.latency_ms;
  return j;
}

enum class ActionKind : std::uint8_t { kNone, kSpeak, kReact };

struct ActionDescriptor {
  ActionKind kind = ActionKind::kNone;
  ResponseLabel label = ResponseLabel::kSilence;
  double t = 0.0;

  bool operator==(const ActionDescriptor&) const = default;
};

/// silence -> no-op, full_response -> speak at t, reactions -> react at t.
inline ActionDescriptor act(const DecisionEvent& e) {
  if (e.label == ResponseLabel::kSilence) return {ActionKind::kNone, e.label, e.t};
  if (e.label == ResponseLabel::kFullResponse) return {ActionKind::kSpeak, e.label, e.t};
  return {ActionKind::kReact, e.label, e.t};
}

inline nlohmann::json action_to_json(const ActionDescriptor& a) {
  switch (a.kind) {
    case ActionKind::kNone: return {{"action", "none"}};
    case ActionKind::kSpeak: return {{"action", "speak"}, {"speak_onset", a.t}};
    case ActionKind::kReact: return {{"action", "react"}, {"react", label_name(a.label)}, {"at", a.t}};
  }
  return {};
}

/// FIFO with absolute element indices; the front can be dropped, never the
/// back.
template <class T>
class IndexedRing {
 public:
  void push(const T& v) { items_.push_back(v); }
  std::size_t begin_index() const { return base_; }
  std::size_t end_index() const { return base_ + items_.size(); }
  std::size_t size() const { return items_.size(); }
  const T& at(std::size_t abs) const { return items_[abs - base_]; }
  void drop_before(std::size_t abs) {
    while (base_ < abs && !items_.empty()) {
      items_.pop_front();
      ++base_;
    }
  }

 private:
  std::deque<T> items_;
  std::size_t base_ = 0;
};

template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T v) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return q_.size() < capacity_; });
    q_.push_back(std::move(v));
    not_empty_.notify_one();
  }

  /// nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<T> q_;
  std::size_t capacity_;
  bool closed_ = false;
};

struct StreamOptions {
  ModalitySet modalities = ModalitySet::all();
  /// Replay speed relative to real time; 0 replays as fast as possible.
  double speed = 0.0;
  /// Run feature extraction and the model in separate threads.
  bool pipelined = false;
  std::size_t queue_capacity = 4;
  /// Optional post-processing of each event before emission (disabled by
  /// default).
  std::function<void(DecisionEvent&)> post_filter;
};

/// Holds the most recent window + stride of each modality and produces one
/// decision per window end. Media is appended in time order; decide(i) uses
/// only data with timestamps in [t_i - window, t_i].
class StreamSession {
 public:
  StreamSession(const Checkpoint& ck, const WindowConfig& window) : ck_(&ck), window_(window) {
    window_.validate();
  }

  void set_audio_format(double sample_rate) { audio_rate_ = sample_rate; }
  void set_video_format(const FrameTrack& shape) {
    video_shape_ = shape;
    video_shape_->pixels.clear();
  }
  void enable_transcript() { has_transcript_ = true; }

  void push_audio(std::span<const float> samples) {
    for (float s : samples) audio_.push(s);
  }
  void push_frame(std::span<const float> pixels) {
    frames_.push(std::vector<float>(pixels.begin(), pixels.end()));
  }
  void push_word(const TimedToken& w) { words_.push_back(w); }

  std::size_t next_index() const { return next_i_; }
  double next_decision_time() const { return clip_end_time(next_i_, window_); }

  /// Seconds of media currently buffered per modality (max over modalities).
  double buffered_span_s() const {
    double span = 0.0;
    if (audio_rate_ > 0.0 && audio_.size() > 0) span = std::max(span, static_cast<double>(audio_.size() - 1) / audio_rate_);
    if (video_shape_ && frames_.size() > 0) {
      span = std::max(span, static_cast<double>(frames_.size() - 1) / video_shape_->fps);
    }
    if (words_.size() > 1) span = std::max(span, words_.back().onset_s - words_.front().onset_s);
    return span;
  }

  /// Features of the next window; advances the index and evicts data the
  /// following window no longer needs.
  ClipFeatures next_features() {
    const double t_end = clip_end_time(next_i_, window_);
    const double t_start = t_end - window_.window_s;
    std::optional<std::span<const float>> audio;
    std::vector<float> audio_copy;
    if (audio_rate_ > 0.0) {
      const IndexRange r = timestamp_range(audio_rate_, t_start, t_end, audio_.end_index());
      audio_copy.reserve(r.size());
      for (std::size_t k = r.first; k < r.last; ++k) audio_copy.push_back(audio_.at(k));
      audio = std::span<const float>(audio_copy);
    }
    std::optional<FrameSequence> frames;
    if (video_shape_) {
      const IndexRange r = timestamp_range(video_shape_->fps, t_start, t_end, frames_.end_index());
      if (!r.empty()) {
        frames = sample_frames_in(t_start, window_.window_s, ck_->frontend.video_fps, *video_shape_, r,
                                  [this](std::size_t j) { return std::span<const float>(frames_.at(j)); });
      }
    }
    std::optional<std::span<const TimedToken>> words;
    std::vector<TimedToken> word_copy;
    if (has_transcript_) {
      for (const auto& w : words_) {
        if (w.onset_s >= t_start && w.onset_s <= t_end) word_copy.push_back(w);
      }
      words = std::span<const TimedToken>(word_copy);
    }
    ClipFeatures f =
        features_from_parts(audio, audio_rate_, frames, words, ck_->frontend, ck_->model.config());
    ++next_i_;
    evict(clip_end_time(next_i_, window_) - window_.window_s);
    return f;
  }

 private:
  void evict(double keep_from) {
    if (audio_rate_ > 0.0) {
      audio_.drop_before(static_cast<std::size_t>(std::max(0.0, std::floor(keep_from * audio_rate_) - 1.0)));
    }
    if (video_shape_) {
      frames_.drop_before(static_cast<std::size_t>(std::max(0.0, std::floor(keep_from * video_shape_->fps) - 1.0)));
    }
    while (!words_.empty() && words_.front().onset_s < keep_from) words_.pop_front();
  }

  const Checkpoint* ck_;
  WindowConfig window_;
  double audio_rate_ = 0.0;
  std::optional<FrameTrack> video_shape_;
  bool has_transcript_ = false;
  IndexedRing<float> audio_;
  IndexedRing<std::vector<float>> frames_;
  std::deque<TimedToken> words_;
  std::size_t next_i_ = 1;
};

/// Replays a recorded timeline through a StreamSession. Media with
/// timestamps up to t_i is pushed before decision i, so every event depends
/// only on the prefix of the timeline up to its own time.
inline std::vector<DecisionEvent> run_stream(const MediaTimeline& tl, const WindowConfig& window, const Checkpoint& ck,
                                             const StreamOptions& opt = {},
                                             const std::function<void(const DecisionEvent&)>& on_event = {}) {
  const std::size_t n = window_count(tl.duration_s, window);
  std::vector<DecisionEvent> events;
  if (n == 0) return events;
  events.reserve(n);
  if (tl.audio) require_compatible_rate(ck, tl.audio->sample_rate);

  StreamSession session(ck, window);
  if (tl.audio) session.set_audio_format(tl.audio->sample_rate);
  if (tl.video) session.set_video_format(*tl.video);
  if (tl.transcript) session.enable_transcript();
  std::size_t audio_pos = 0, frame_pos = 0, word_pos = 0;
  using Clock = std::chrono::steady_clock;
  const auto wall_start = Clock::now();

  struct Job {
    std::size_t i;
    double t;
    ClipFeatures features;
    Clock::time_point ready;
  };
  auto produce = [&](std::size_t i) {
    const double t = clip_end_time(i, window);
    if (opt.speed > 0.0) {
      std::this_thread::sleep_until(wall_start + std::chrono::duration_cast<Clock::duration>(
                                                     std::chrono::duration<double>(t / opt.speed)));
    }
    if (tl.audio) {
      const std::size_t end = timestamp_range(tl.audio->sample_rate, 0.0, t, tl.audio->samples.size()).last;
      if (end > audio_pos) {
        session.push_audio(std::span<const float>(tl.audio->samples).subspan(audio_pos, end - audio_pos));
        audio_pos = end;
      }
    }
    if (tl.video) {
      const std::size_t end = timestamp_range(tl.video->fps, 0.0, t, tl.video->frame_count()).last;
      for (; frame_pos < end; ++frame_pos) session.push_frame(tl.video->frame(frame_pos));
    }
    if (tl.transcript) {
      const auto& words = *tl.transcript;
      for (; word_pos < words.size() && words[word_pos].onset_s <= t; ++word_pos) session.push_word(words[word_pos]);
    }
    const auto ready = Clock::now();
    return Job{i, t, session.next_features(), ready};
  };
  auto consume = [&](Job& job) {
    DecisionEvent e;
    e.i = job.i;
    e.t = job.t;
    const Prediction p = predict_features(ck.model, job.features, opt.modalities);
    e.label = p.label;
    e.probs = p.probs;
    e.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - job.ready).count();
    if (opt.post_filter) opt.post_filter(e);
    events.push_back(e);
    if (on_event) on_event(e);
  };

  if (!opt.pipelined) {
    for (std::size_t i = 1; i <= n; ++i) {
      Job job = produce(i);
      consume(job);
    }
    return events;
  }
  BoundedQueue<Job> queue(std::max<std::size_t>(1, opt.queue_capacity));
  std::exception_ptr producer_error;
  std::thread producer([&] {
    try {
      for (std::size_t i = 1; i <= n; ++i) queue.push(produce(i));
    } catch (...) {
      producer_error = std::current_exception();
    }
    queue.close();
  });
  std::exception_ptr consumer_error;
  while (auto job = queue.pop()) {
    if (consumer_error) continue;  // drain so the producer can finish
    try {
      consume(*job);
    } catch (...) {
      consumer_error = std::current_exception();
    }
  }
  producer.join();
  if (producer_error) std::rethrow_exception(producer_error);
  if (consumer_error) std::rethrow_exception(consumer_error);
  return events;
}

}  // namespace mmw2s
