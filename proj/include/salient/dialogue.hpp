#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "salient/errors.hpp"
#include "salient/rewriter.hpp"
#include "salient/text.hpp"

// Mixed-initiative follow-up handling: after a follow-up rewrite goes out,
// the next user utterance either accepts the offer (by entity name or a bare
// affirmative) or ignores it. Offers expire after that one turn either way.

namespace salient::dialogue {

struct FollowUpState {
  std::vector<rewriter::TargetRef> offered;  // rendered order
  std::string conversation_id;
  int turn_index = 0;
  bool resolved = false;
};

inline FollowUpState open_followup(const rewriter::RewriteResult& rewrite,
                                   std::string conversation_id = {}, int turn_index = 0) {
  if (!rewriter::is_followup(rewrite.strategy)) {
    throw Error(ErrorCode::WrongStrategy, "rewrite is not a follow-up strategy");
  }
  if (rewrite.targets.empty()) {
    throw Error(ErrorCode::NoTargets, "follow-up rewrite carries no offered entities");
  }
  return {rewrite.targets, std::move(conversation_id), turn_index, false};
}

enum class OutcomeKind { Define, PassThrough };

struct Outcome {
  OutcomeKind kind = OutcomeKind::PassThrough;
  std::string entity_id;
  std::string response;  // "{label}: {description}." for Define
};

namespace detail {

inline bool is_bare_affirmative(std::string_view utterance) {
  std::string folded = text::normalize(utterance);
  while (!folded.empty() &&
         (folded.back() == '.' || folded.back() == '!' || folded.back() == '?' ||
          folded.back() == ' ')) {
    folded.pop_back();
  }
  return folded == "yes" || folded == "sure" || folded == "ok" || folded == "yes please";
}

}  // namespace detail

// One outcome per offer. A named entity wins over everything; with several
// named, the first-offered one wins. A bare "yes" only counts when exactly
// one entity was offered; anything else passes through untouched. The state
// resolves exactly once; a second call is an error.
inline Outcome interpret_user_turn(std::string_view utterance, FollowUpState& state) {
  if (state.resolved) {
    throw Error(ErrorCode::AlreadyResolved, "offer was already resolved");
  }
  state.resolved = true;
  for (const rewriter::TargetRef& offer : state.offered) {
    if (text::contains_token_phrase(utterance, offer.label)) {
      return {OutcomeKind::Define, offer.entity_id,
              offer.label + ": " + offer.description + "."};
    }
  }
  if (state.offered.size() == 1 && detail::is_bare_affirmative(utterance)) {
    const rewriter::TargetRef& offer = state.offered.front();
    return {OutcomeKind::Define, offer.entity_id, offer.label + ": " + offer.description + "."};
  }
  return {OutcomeKind::PassThrough, {}, {}};
}

}  // namespace salient::dialogue
