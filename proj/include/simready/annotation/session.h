#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simready/annotation/chat_client.h"
#include "simready/annotation/description.h"
#include "simready/annotation/prompts.h"
#include "simready/annotation/proposal.h"

namespace simready::annotation {

// kNew is the state before the first round; the rest mirror the review loop.
enum class SessionState { kNew, kProposed, kSimulated, kAccepted, kAwaitingRequery };
inline constexpr std::array<SessionState, 5> kAllSessionStates = {
    SessionState::kNew, SessionState::kProposed, SessionState::kSimulated,
    SessionState::kAccepted, SessionState::kAwaitingRequery};

enum class SessionEvent {
  kAnnotate,       // first round
  kRetry,          // re-run after a round without a valid proposal
  kSimulate,       // a simulation job finished for the current proposal
  kPlausible,      // verdict
  kImplausible,    // verdict with comments
  kRequery,        // feedback-driven round
  kOverride,       // expert edits parameters directly
};
inline constexpr std::array<SessionEvent, 7> kAllSessionEvents = {
    SessionEvent::kAnnotate, SessionEvent::kRetry,       SessionEvent::kSimulate,
    SessionEvent::kPlausible, SessionEvent::kImplausible, SessionEvent::kRequery,
    SessionEvent::kOverride};

std::string_view to_string(SessionState s);
SessionState session_state_from_string(std::string_view s);
std::string_view to_string(SessionEvent e);

// The complete transition table; nullopt means the event is a conflict.
std::optional<SessionState> next_state(SessionState s, SessionEvent e);

enum class Verdict { kPending, kPlausible, kImplausible };
std::string_view to_string(Verdict v);

struct PartComment {
  std::string part;  // may be empty for object-level remarks
  std::string text;

  friend bool operator==(const PartComment&, const PartComment&) = default;
};

// "the cushion is too stiff; the leg bends" from {cushion, "is too stiff"},
// {leg, "bends."}. Trailing periods are dropped.
std::string assemble_comment(const std::vector<PartComment>& comments);

struct VerdictRecord {
  std::string job_id;
  std::string scenario;               // canonical scenario JSON
  std::string test_case_description;  // completes "when the object ... in the simulator"
  Verdict decision = Verdict::kPending;
  std::vector<PartComment> comments;
  std::string reviewer;
  std::string timestamp;
};

// First-round exchange for one coarse material group.
struct FineRound {
  ChatMessage prompt;
  std::string raw_response;
  std::map<std::string, std::string> assigned;
  std::vector<std::string> errors;
};

struct Iteration {
  std::string origin;  // "initial", "retry", "requery" or "override"
  std::vector<FineRound> fine_rounds;
  std::vector<ChatMessage> request;  // parameter round messages
  std::string raw_response;
  std::optional<ParsedProposal> proposal;
  std::string parse_error;
  ValidationResult validation;
  std::vector<std::string> jobs;
  Verdict verdict = Verdict::kPending;
  std::optional<VerdictRecord> review;
  std::string created_at;

  bool valid() const { return proposal.has_value() && validation.ok(); }
};

struct AnnotationSession {
  std::string id;
  ObjectDescription description;
  SessionState state = SessionState::kNew;
  ValidationMode mode = ValidationMode::kStrict;
  std::vector<Iteration> iterations;  // append-only
  std::string error;                  // last transport failure, empty otherwise
  std::string created_at;
  std::string updated_at;

  int rectification_count() const {
    return iterations.empty() ? 0 : static_cast<int>(iterations.size()) - 1;
  }
  const Iteration* latest() const { return iterations.empty() ? nullptr : &iterations.back(); }
  // Materials of the latest iteration when it validated; nullptr otherwise.
  const std::map<std::string, assets::MaterialParams>* validated_materials() const;
};

AnnotationSession make_session(std::string id, ObjectDescription desc,
                               ValidationMode mode = ValidationMode::kStrict);

// Feedback thread for the next round: the initial parameter prompt, the latest
// raw response and the feedback text. Throws ConflictError without a
// completed iteration.
std::vector<ChatMessage> build_feedback_prompt(const AnnotationSession& session,
                                               std::string_view test_case_description,
                                               std::string_view user_comment);

struct RoundOptions {
  RetryPolicy retry;
  std::function<std::string()> now;  // timestamp source; default UTC ISO-8601
};

std::string utc_timestamp();

// Runs the round the session's state calls for (first, retry or requery) and
// appends one iteration. Parse and validation failures are recorded on the
// iteration. When every transport attempt fails nothing is appended,
// session.error is set and TransportError propagates. Throws ConflictError in
// states that allow no round.
void run_annotation_round(AnnotationSession& session, ChatClient& client,
                          const RoundOptions& options = {});

// A simulation of the current proposal finished.
void mark_simulated(AnnotationSession& session, const std::string& job_id,
                    const RoundOptions& options = {});

// Implausible verdicts need at least one non-empty comment (ValidationError).
void record_verdict(AnnotationSession& session, VerdictRecord verdict,
                    const RoundOptions& options = {});

// Direct parameter edit by an expert. Appends an "override" iteration when the
// proposal validates; throws ValidationError otherwise.
void apply_override(AnnotationSession& session, const ParsedProposal& proposal,
                    const RoundOptions& options = {});

nlohmann::json session_to_json(const AnnotationSession& s);
AnnotationSession session_from_json(const nlohmann::json& j);

// <dir>/<id>.json, written atomically.
void save_session(const AnnotationSession& s, const std::filesystem::path& dir);
AnnotationSession load_session(const std::filesystem::path& file);

}  // namespace simready::annotation
