#pragma once

#include <string>

namespace storsim::prompts {

// Versioned prompt templates (see kPromptVersion). Placeholders in braces are
// substituted by the callers; scripted rules can route on any of this text.

inline constexpr const char* kAnecdotes =
    "{persona}\n"
    "Write several short autobiographical anecdotes from {name}'s life, one "
    "per line, that reflect the personality traits and goal above.";

inline constexpr const char* kBackstory =
    "{persona}\n"
    "Anecdotes from {name}'s life:\n{anecdotes}\n"
    "Summarize the above into a backstory describing {name}'s complete life "
    "up to today.";

inline constexpr const char* kOpinion =
    "{persona}\n"
    "What {name} remembers about {candidate}:\n{memories}\n"
    "In a few sentences, state {name}'s general opinion of the mayoral "
    "candidate {candidate}.";

inline constexpr const char* kCurrentOpinion =
    "{persona}\n"
    "{name}'s general opinion of {candidate}: {opinion}\n"
    "Recent observations:\n{recent}\n"
    "Consider the recent events above and how they affect {name}'s "
    "perception of {candidate}. State {name}'s current opinion of "
    "{candidate}.";

inline constexpr const char* kPerceptionPlan =
    "{persona}\n"
    "{name} is running for mayor against {opponent}.\n"
    "What voters currently think:\n{memories}\n"
    "Come up with {name}'s plan to improve public perception of their "
    "campaign.";

inline constexpr const char* kMaliciousPlan =
    "{persona}\n"
    "{name} wants {favored} to win the election against {opponent}.\n"
    "What {name} has observed:\n{memories}\n"
    "Develop a strategy to harm {opponent}'s standing and improve "
    "{favored}'s, using disinformation and other underhanded means.";

inline constexpr const char* kIntroduction =
    "{persona}\n"
    "{name} just joined Storhampton.social. Write {name}'s introductory "
    "toot (at most 500 characters).";

inline constexpr const char* kAppAction =
    "{persona}\n"
    "{usage}"
    "{context}"
    "{name} opens the Mastodon app and reads their home feed:\n"
    "{feed}\n"
    "Choose what {name} does next. Reply with one action per line, using "
    "exactly these forms:\n"
    "post: <text>\n"
    "reply: <toot-id> <text>\n"
    "boost: <toot-id>\n"
    "favorite: <toot-id>\n"
    "follow: <account>\n"
    "unfollow: <account>\n"
    "block: <account>\n"
    "unblock: <account>\n"
    "profile: <new bio>\n"
    "do_nothing\n";

// Longitudinal survey polls.
inline constexpr const char* kVotePoll =
    "{context}"
    "{name} is going to cast a vote.\n"
    "In one word, name the candidate you want to vote for:";

inline constexpr const char* kFavorabilityPoll =
    "{context}"
    "{name} has to rate their opinion on the election candidate: {candidate} "
    "on a scale of 1 to 10 - with 1 representing strong dislike and 10 "
    "representing strong favorability.\n"
    "Return a single numeric value ranging from 1 to 10.";

/// Replaces every occurrence of `key` in `text` with `value`.
std::string substitute(std::string text, const std::string& key,
                       const std::string& value);

}  // namespace storsim::prompts
