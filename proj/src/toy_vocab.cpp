#include "tdd/toy_backend.hpp"

namespace tdd {

const std::vector<std::string>& toy_word_list() {
    // Evaluation, steering and demo words come first so they survive small
    // vocabularies; generic English fills the rest.
    static const std::vector<std::string> words = {
        ".", ",", "!", "?", "'", ";", ":",
        "positive", "negative",
        "those", "drivers", "driver", "joel", "complains", "about",
        "amanda", "was", "respected", "by", "some", "waitresses", "picture",
        "even", "many", "birds", "can", "really", "ever",
        "guys", "guy", "this", "design", "is", "quite", "novel", "and", "fantastic",
        "i", "like", "hate",
        "good", "bad", "happy", "sad", "love", "wonderful", "terrible", "great", "awful",
        "beautiful", "ugly", "nice", "best", "worst", "joy", "pain", "angry", "calm",
        "excellent", "horrible", "kind", "cruel", "brilliant", "boring", "pleasant", "nasty",
        "stupid", "idiot", "dumb", "damn", "kill", "fool", "gross", "crap", "hell", "jerk",
        "loser", "moron", "trash", "shut", "die",
        "the", "of", "to", "a", "in", "it", "you", "that", "he", "for", "on", "are",
        "with", "as", "his", "they", "be", "at", "one", "have", "from", "or", "had",
        "not", "but", "what", "we", "out", "other", "were", "all", "there", "when",
        "up", "use", "your", "how", "said", "an", "each", "she", "which", "do", "their",
        "time", "if", "will", "way", "then", "them", "would", "write", "so", "these",
        "her", "long", "make", "thing", "see", "him", "two", "has", "look", "more", "day",
        "could", "go", "come", "did", "number", "sound", "no", "most", "people", "my",
        "over", "know", "water", "than", "call", "first", "who", "may", "down", "side",
        "been", "now", "find", "any", "new", "work", "part", "take", "get", "place",
        "made", "live", "where", "after", "back", "little", "only", "round", "man", "year",
        "came", "show", "every", "me", "give", "our", "under", "name", "very", "through",
        "just", "form", "sentence", "think", "say", "help", "low", "line", "differ",
        "turn", "cause", "much", "mean", "before", "move", "right", "boy", "old", "too",
        "same", "tell", "does", "set", "three", "want", "air", "well", "also", "play",
        "small", "end", "put", "home", "read", "hand", "port", "large", "spell", "add",
        "land", "here", "must", "big", "high", "such", "follow", "act", "why", "ask",
        "men", "change", "went", "light", "off", "need", "house", "try", "us",
        "again", "animal", "point", "mother", "world", "near", "build", "self", "earth",
        "father", "head", "stand", "own", "page", "should", "country", "found", "answer",
        "school", "grow", "study", "still", "learn", "plant", "cover", "food", "sun",
        "four", "between", "state", "keep", "eye", "never", "last", "let", "thought",
        "city", "tree", "cross", "farm", "hard", "start", "might", "story", "saw", "far",
        "sea", "draw", "left", "late", "run", "while", "press", "close", "night", "real",
        "life", "few", "north", "open", "seem", "together", "next", "white", "children",
        "begin", "got", "walk", "example", "ease", "paper", "group", "always", "music",
        "both", "mark", "often", "letter", "until", "mile", "river", "car", "feet",
        "care", "second", "book", "carry", "took", "science", "eat", "room", "friend",
        "began", "idea", "fish", "mountain", "stop", "once", "base", "hear", "horse",
        "cut", "sure", "watch", "color", "face", "wood", "main", "enough", "plain", "girl",
        "usual", "young", "ready", "above", "red", "list", "though", "feel", "talk",
        "bird", "soon", "body", "dog", "family", "direct", "pose", "leave", "song",
        "measure", "door", "product", "black", "short", "numeral", "class", "wind",
        "question", "happen", "complete", "ship", "area", "half", "rock", "order", "fire",
        "south", "problem", "piece", "told", "knew", "pass", "since", "top", "whole",
        "king", "space", "heard", "ten", "morning", "movie", "film", "food", "service",
        "weather", "today", "yesterday", "tomorrow", "always", "sometimes", "nothing",
        "everything", "someone", "anyone", "everyone", "thank", "thanks", "please",
        "sorry", "hello", "yes", "okay", "maybe", "because", "without", "against",
    };
    return words;
}

} // namespace tdd
