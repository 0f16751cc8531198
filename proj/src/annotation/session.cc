#include "simready/annotation/session.h"

#include <algorithm>
#include <ctime>
#include <fstream>

#include "simready/common/error.h"

namespace simready::annotation {

using nlohmann::json;

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kNew: return "new";
    case SessionState::kProposed: return "proposed";
    case SessionState::kSimulated: return "simulated";
    case SessionState::kAccepted: return "accepted";
    case SessionState::kAwaitingRequery: return "awaiting_requery";
  }
  return "unknown";
}

SessionState session_state_from_string(std::string_view s) {
  for (SessionState state : kAllSessionStates) {
    if (to_string(state) == s) return state;
  }
  throw ParseError("state", "unknown session state '" + std::string(s) + "'");
}

std::string_view to_string(SessionEvent e) {
  switch (e) {
    case SessionEvent::kAnnotate: return "annotate";
    case SessionEvent::kRetry: return "retry";
    case SessionEvent::kSimulate: return "simulate";
    case SessionEvent::kPlausible: return "plausible";
    case SessionEvent::kImplausible: return "implausible";
    case SessionEvent::kRequery: return "requery";
    case SessionEvent::kOverride: return "override";
  }
  return "unknown";
}

std::optional<SessionState> next_state(SessionState s, SessionEvent e) {
  using S = SessionState;
  using E = SessionEvent;
  switch (s) {
    case S::kNew:
      if (e == E::kAnnotate) return S::kProposed;
      break;
    case S::kProposed:
      if (e == E::kRetry || e == E::kOverride) return S::kProposed;
      if (e == E::kSimulate) return S::kSimulated;
      break;
    case S::kSimulated:
      // Further scenarios may be simulated before the verdict.
      if (e == E::kSimulate) return S::kSimulated;
      if (e == E::kPlausible) return S::kAccepted;
      if (e == E::kImplausible) return S::kAwaitingRequery;
      break;
    case S::kAwaitingRequery:
      if (e == E::kRequery || e == E::kOverride) return S::kProposed;
      break;
    case S::kAccepted:
      break;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kPending: return "pending";
    case Verdict::kPlausible: return "plausible";
    case Verdict::kImplausible: return "implausible";
  }
  return "unknown";
}

namespace {

Verdict verdict_from_string(std::string_view s) {
  for (Verdict v : {Verdict::kPending, Verdict::kPlausible, Verdict::kImplausible}) {
    if (to_string(v) == s) return v;
  }
  throw ParseError("decision", "unknown verdict '" + std::string(s) + "'");
}

SessionState transition(const AnnotationSession& s, SessionEvent e) {
  auto next = next_state(s.state, e);
  if (!next) {
    throw ConflictError("cannot " + std::string(to_string(e)) + " a session in state " +
                        std::string(to_string(s.state)));
  }
  return *next;
}

std::string timestamp(const RoundOptions& options) {
  return options.now ? options.now() : utc_timestamp();
}

}  // namespace

std::string assemble_comment(const std::vector<PartComment>& comments) {
  std::string out;
  for (const auto& c : comments) {
    std::string text = c.text;
    while (!text.empty() && (text.back() == '.' || text.back() == ' ')) text.pop_back();
    if (text.empty()) continue;
    if (!out.empty()) out += "; ";
    out += c.part.empty() ? text : "the " + c.part + " " + text;
  }
  return out;
}

const std::map<std::string, assets::MaterialParams>* AnnotationSession::validated_materials()
    const {
  const Iteration* it = latest();
  return it != nullptr && it->valid() ? &it->validation.materials : nullptr;
}

AnnotationSession make_session(std::string id, ObjectDescription desc, ValidationMode mode) {
  validate_description(desc);
  AnnotationSession s;
  s.id = std::move(id);
  s.description = std::move(desc);
  s.mode = mode;
  s.created_at = utc_timestamp();
  s.updated_at = s.created_at;
  return s;
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<ChatMessage> build_feedback_prompt(const AnnotationSession& session,
                                               std::string_view test_case_description,
                                               std::string_view user_comment) {
  const Iteration* last = session.latest();
  if (last == nullptr || last->raw_response.empty()) {
    throw ConflictError("session " + session.id + " has no completed iteration");
  }
  // The parameter prompt of the most recent non-feedback VLM round.
  const ChatMessage* original = nullptr;
  for (const auto& it : session.iterations) {
    if (it.request.size() == 1) original = &it.request.front();
  }
  if (original == nullptr) {
    throw ConflictError("session " + session.id + " has no parameter prompt to thread");
  }
  return build_feedback_thread(*original, last->raw_response, test_case_description, user_comment);
}

void run_annotation_round(AnnotationSession& session, ChatClient& client,
                          const RoundOptions& options) {
  SessionEvent event = SessionEvent::kAnnotate;
  if (session.state == SessionState::kProposed) {
    event = SessionEvent::kRetry;
    if (session.latest() != nullptr && session.latest()->valid()) {
      throw ConflictError("session " + session.id + " already has a valid proposal");
    }
  } else if (session.state == SessionState::kAwaitingRequery) {
    event = SessionEvent::kRequery;
  }
  const SessionState next = transition(session, event);

  Iteration it;
  it.origin = event == SessionEvent::kAnnotate ? "initial"
              : event == SessionEvent::kRetry  ? "retry"
                                               : "requery";
  it.created_at = timestamp(options);
  ObjectDescription desc = session.description;

  auto send = [&](const std::vector<ChatMessage>& messages) {
    try {
      return complete_with_retry(client, messages, options.retry);
    } catch (const TransportError& e) {
      session.error = e.what();
      session.updated_at = timestamp(options);
      throw;
    }
  };

  if (event == SessionEvent::kRequery) {
    const VerdictRecord& review = *session.latest()->review;
    it.request = build_feedback_prompt(session, review.test_case_description,
                                       assemble_comment(review.comments));
  } else {
    // First round: one fine-material query per coarse material with a catalog.
    std::vector<std::string> groups;
    for (const auto& p : desc.parts) {
      if (p.fine_material.empty() && fine_catalog(p.coarse_material) != nullptr &&
          std::find(groups.begin(), groups.end(), p.coarse_material) == groups.end()) {
        groups.push_back(p.coarse_material);
      }
    }
    for (const auto& coarse : groups) {
      std::vector<std::string> targets;
      for (const auto& p : desc.parts) {
        if (p.coarse_material == coarse && p.fine_material.empty()) targets.push_back(p.name);
      }
      FineRound round;
      round.prompt = {"user", build_fine_material_prompt(desc, targets), desc.images};
      round.raw_response = send({round.prompt});
      try {
        const auto answer = parse_fine_material_response(round.raw_response);
        const auto& catalog = *fine_catalog(coarse);
        for (const auto& name : targets) {
          auto a = answer.find(name);
          if (a == answer.end()) {
            round.errors.push_back("no fine material given for part '" + name + "'");
          } else if (std::find(catalog.begin(), catalog.end(), a->second) == catalog.end()) {
            round.errors.push_back("part '" + name + "': '" + a->second + "' is not offered for " +
                                   coarse);
          } else {
            round.assigned[name] = a->second;
          }
        }
        for (const auto& [name, value] : answer) {
          if (std::find(targets.begin(), targets.end(), name) == targets.end()) {
            round.errors.push_back("answer names part '" + name + "' that was not asked about");
          }
        }
      } catch (const ParseError& e) {
        round.errors.push_back(e.what());
      }
      for (auto& p : desc.parts) {
        if (auto a = round.assigned.find(p.name); a != round.assigned.end()) p.fine_material = a->second;
      }
      it.fine_rounds.push_back(std::move(round));
    }
    it.request = {{"user", build_parameter_prompt(desc), desc.images}};
  }

  it.raw_response = send(it.request);
  try {
    it.proposal = parse_parameter_response(it.raw_response);
    it.validation = validate_proposal(desc, *it.proposal, default_allowed_combos(), session.mode);
  } catch (const ParseError& e) {
    it.parse_error = e.what();
  }

  session.description = std::move(desc);
  session.iterations.push_back(std::move(it));
  session.state = next;
  session.error.clear();
  session.updated_at = session.iterations.back().created_at;
}

void mark_simulated(AnnotationSession& session, const std::string& job_id,
                    const RoundOptions& options) {
  if (session.validated_materials() == nullptr) {
    throw ConflictError("session " + session.id + " has no validated proposal");
  }
  session.state = transition(session, SessionEvent::kSimulate);
  session.iterations.back().jobs.push_back(job_id);
  session.updated_at = timestamp(options);
}

void record_verdict(AnnotationSession& session, VerdictRecord verdict,
                    const RoundOptions& options) {
  SessionEvent event;
  if (verdict.decision == Verdict::kPlausible) {
    event = SessionEvent::kPlausible;
  } else if (verdict.decision == Verdict::kImplausible) {
    event = SessionEvent::kImplausible;
    if (assemble_comment(verdict.comments).empty()) {
      throw ValidationError({"an implausible verdict needs at least one comment"});
    }
  } else {
    throw ValidationError({"decision must be plausible or implausible"});
  }
  const SessionState next = transition(session, event);
  Iteration& it = session.iterations.back();
  if (!verdict.job_id.empty() &&
      std::find(it.jobs.begin(), it.jobs.end(), verdict.job_id) == it.jobs.end()) {
    throw ConflictError("job " + verdict.job_id + " did not simulate the current proposal");
  }
  if (verdict.timestamp.empty()) verdict.timestamp = timestamp(options);
  it.verdict = verdict.decision;
  it.review = std::move(verdict);
  session.state = next;
  session.updated_at = it.review->timestamp;
}

void apply_override(AnnotationSession& session, const ParsedProposal& proposal,
                    const RoundOptions& options) {
  const SessionState next = transition(session, SessionEvent::kOverride);
  ValidationResult validation =
      validate_proposal(session.description, proposal, default_allowed_combos(), session.mode);
  if (!validation.ok()) {
    std::vector<std::string> failures;
    for (const auto& v : validation.errors) failures.push_back(v.message());
    throw ValidationError(std::move(failures));
  }
  Iteration it;
  it.origin = "override";
  it.created_at = timestamp(options);
  // Stands in for the model's answer if the thread is continued later.
  it.raw_response = proposal_to_json(proposal).at("parts").dump(2);
  it.proposal = proposal;
  it.validation = std::move(validation);
  session.iterations.push_back(std::move(it));
  session.state = next;
  session.updated_at = session.iterations.back().created_at;
}

namespace {

json messages_to_json(const std::vector<ChatMessage>& ms) {
  json out = json::array();
  for (const auto& m : ms) out.push_back(message_to_json(m));
  return out;
}

std::vector<ChatMessage> messages_from_json(const json& j) {
  std::vector<ChatMessage> out;
  for (const auto& m : j) out.push_back(message_from_json(m));
  return out;
}

json review_to_json(const VerdictRecord& v) {
  json comments = json::array();
  for (const auto& c : v.comments) comments.push_back({{"part", c.part}, {"text", c.text}});
  return {{"job_id", v.job_id},
          {"scenario", v.scenario},
          {"test_case_description", v.test_case_description},
          {"decision", to_string(v.decision)},
          {"comments", std::move(comments)},
          {"reviewer", v.reviewer},
          {"timestamp", v.timestamp}};
}

VerdictRecord review_from_json(const json& j) {
  VerdictRecord v;
  v.job_id = j.at("job_id").get<std::string>();
  v.scenario = j.at("scenario").get<std::string>();
  v.test_case_description = j.at("test_case_description").get<std::string>();
  v.decision = verdict_from_string(j.at("decision").get<std::string>());
  for (const auto& c : j.at("comments")) {
    v.comments.push_back({c.at("part").get<std::string>(), c.at("text").get<std::string>()});
  }
  v.reviewer = j.at("reviewer").get<std::string>();
  v.timestamp = j.at("timestamp").get<std::string>();
  return v;
}

constexpr int kSessionSchemaVersion = 1;

}  // namespace

json session_to_json(const AnnotationSession& s) {
  json iterations = json::array();
  for (const auto& it : s.iterations) {
    json rounds = json::array();
    for (const auto& r : it.fine_rounds) {
      rounds.push_back({{"prompt", message_to_json(r.prompt)},
                        {"raw_response", r.raw_response},
                        {"assigned", r.assigned},
                        {"errors", r.errors}});
    }
    json ji = {{"origin", it.origin},
               {"fine_rounds", std::move(rounds)},
               {"request", messages_to_json(it.request)},
               {"raw_response", it.raw_response},
               {"proposal", it.proposal ? proposal_to_json(*it.proposal) : json(nullptr)},
               {"parse_error", it.parse_error},
               {"validation", validation_to_json(it.validation)},
               {"jobs", it.jobs},
               {"verdict", to_string(it.verdict)},
               {"review", it.review ? review_to_json(*it.review) : json(nullptr)},
               {"created_at", it.created_at}};
    iterations.push_back(std::move(ji));
  }
  return {{"version", kSessionSchemaVersion},
          {"id", s.id},
          {"description", description_to_json(s.description)},
          {"state", to_string(s.state)},
          {"mode", s.mode == ValidationMode::kStrict ? "strict" : "lenient"},
          {"rectification_count", s.rectification_count()},
          {"iterations", std::move(iterations)},
          {"error", s.error},
          {"created_at", s.created_at},
          {"updated_at", s.updated_at}};
}

AnnotationSession session_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kSessionSchemaVersion) {
      throw ParseError("version", "unsupported session schema version");
    }
    AnnotationSession s;
    s.id = j.at("id").get<std::string>();
    s.description = description_from_json(j.at("description"));
    s.state = session_state_from_string(j.at("state").get<std::string>());
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "strict" && mode != "lenient") throw ParseError("mode", "unknown mode " + mode);
    s.mode = mode == "strict" ? ValidationMode::kStrict : ValidationMode::kLenient;
    for (const auto& ji : j.at("iterations")) {
      Iteration it;
      it.origin = ji.at("origin").get<std::string>();
      for (const auto& r : ji.at("fine_rounds")) {
        it.fine_rounds.push_back({message_from_json(r.at("prompt")),
                                  r.at("raw_response").get<std::string>(),
                                  r.at("assigned").get<std::map<std::string, std::string>>(),
                                  r.at("errors").get<std::vector<std::string>>()});
      }
      it.request = messages_from_json(ji.at("request"));
      it.raw_response = ji.at("raw_response").get<std::string>();
      if (!ji.at("proposal").is_null()) it.proposal = proposal_from_json(ji.at("proposal"));
      it.parse_error = ji.at("parse_error").get<std::string>();
      it.validation = validation_from_json(ji.at("validation"));
      it.jobs = ji.at("jobs").get<std::vector<std::string>>();
      it.verdict = verdict_from_string(ji.at("verdict").get<std::string>());
      if (!ji.at("review").is_null()) it.review = review_from_json(ji.at("review"));
      it.created_at = ji.at("created_at").get<std::string>();
      s.iterations.push_back(std::move(it));
    }
    s.error = j.at("error").get<std::string>();
    s.created_at = j.at("created_at").get<std::string>();
    s.updated_at = j.at("updated_at").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw ParseError("session", e.what());
  }
}

void save_session(const AnnotationSession& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto target = dir / (s.id + ".json");
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << session_to_json(s).dump(2) << '\n';
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

AnnotationSession load_session(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw NotFoundError("session file not found: " + file.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError(file.string(), "not valid JSON");
  return session_from_json(j);
}

}  // namespace simready::annotation
