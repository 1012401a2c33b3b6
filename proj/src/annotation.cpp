#include "acsqg/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <set>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "acsqg/errors.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

using json = nlohmann::json;

namespace {

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

bool is_capitalized(const std::string& w) {
    return !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
}

bool is_number_token(const std::string& w) {
    bool digit = false;
    for (char c : w) {
        if (std::isdigit(static_cast<unsigned char>(c)))
            digit = true;
        else if (c != '.' && c != ',' && c != '-')
            return false;
    }
    return digit;
}

const std::unordered_map<std::string, std::string>& closed_class() {
    static const std::unordered_map<std::string, std::string> map = {
        {"the", "DET"}, {"a", "DET"}, {"an", "DET"}, {"this", "DET"}, {"that", "DET"},
        {"these", "DET"}, {"those", "DET"}, {"every", "DET"}, {"each", "DET"},
        {"some", "DET"}, {"no", "DET"}, {"all", "DET"}, {"both", "DET"}, {"either", "DET"},
        {"any", "DET"}, {"another", "DET"},
        {"in", "ADP"}, {"on", "ADP"}, {"at", "ADP"}, {"by", "ADP"}, {"for", "ADP"},
        {"with", "ADP"}, {"from", "ADP"}, {"of", "ADP"}, {"into", "ADP"}, {"onto", "ADP"},
        {"over", "ADP"}, {"under", "ADP"}, {"about", "ADP"}, {"between", "ADP"},
        {"through", "ADP"}, {"during", "ADP"}, {"before", "ADP"}, {"after", "ADP"},
        {"above", "ADP"}, {"below", "ADP"}, {"against", "ADP"}, {"within", "ADP"},
        {"without", "ADP"}, {"toward", "ADP"}, {"towards", "ADP"}, {"upon", "ADP"},
        {"since", "ADP"}, {"until", "ADP"}, {"among", "ADP"}, {"across", "ADP"},
        {"behind", "ADP"}, {"near", "ADP"}, {"per", "ADP"}, {"as", "ADP"},
        {"i", "PRON"}, {"you", "PRON"}, {"he", "PRON"}, {"she", "PRON"}, {"it", "PRON"},
        {"we", "PRON"}, {"they", "PRON"}, {"me", "PRON"}, {"him", "PRON"}, {"her", "PRON"},
        {"us", "PRON"}, {"them", "PRON"}, {"my", "PRON"}, {"your", "PRON"}, {"his", "PRON"},
        {"its", "PRON"}, {"our", "PRON"}, {"their", "PRON"}, {"mine", "PRON"},
        {"himself", "PRON"}, {"herself", "PRON"}, {"itself", "PRON"}, {"themselves", "PRON"},
        {"who", "PRON"}, {"whom", "PRON"}, {"whose", "PRON"}, {"which", "PRON"},
        {"what", "PRON"}, {"something", "PRON"}, {"anything", "PRON"}, {"nothing", "PRON"},
        {"someone", "PRON"}, {"anyone", "PRON"}, {"everyone", "PRON"},
        {"am", "AUX"}, {"is", "AUX"}, {"are", "AUX"}, {"was", "AUX"}, {"were", "AUX"},
        {"be", "AUX"}, {"been", "AUX"}, {"being", "AUX"},
        {"do", "AUX"}, {"does", "AUX"}, {"did", "AUX"},
        {"have", "AUX"}, {"has", "AUX"}, {"had", "AUX"},
        {"will", "AUX"}, {"would", "AUX"}, {"shall", "AUX"}, {"should", "AUX"},
        {"can", "AUX"}, {"could", "AUX"}, {"may", "AUX"}, {"might", "AUX"}, {"must", "AUX"},
        {"and", "CCONJ"}, {"or", "CCONJ"}, {"but", "CCONJ"}, {"nor", "CCONJ"},
        {"yet", "CCONJ"}, {"so", "CCONJ"},
        {"if", "SCONJ"}, {"because", "SCONJ"}, {"while", "SCONJ"}, {"although", "SCONJ"},
        {"though", "SCONJ"}, {"unless", "SCONJ"}, {"whereas", "SCONJ"}, {"whether", "SCONJ"},
        {"to", "PART"}, {"not", "PART"}, {"n't", "PART"},
        {"when", "ADV"}, {"where", "ADV"}, {"why", "ADV"}, {"how", "ADV"},
        {"there", "ADV"}, {"here", "ADV"}, {"now", "ADV"}, {"then", "ADV"},
        {"never", "ADV"}, {"always", "ADV"}, {"often", "ADV"}, {"very", "ADV"},
        {"too", "ADV"}, {"also", "ADV"}, {"just", "ADV"}, {"only", "ADV"},
    };
    return map;
}

// Common irregular verb forms the suffix rules cannot catch.
const std::unordered_map<std::string, std::string>& irregular_verbs() {
    static const std::unordered_map<std::string, std::string> map = {
        {"left", "leave"}, {"won", "win"},   {"went", "go"},    {"said", "say"},
        {"made", "make"},  {"took", "take"}, {"gave", "give"},  {"saw", "see"},
        {"knew", "know"},  {"got", "get"},   {"came", "come"},  {"found", "find"},
        {"ran", "run"},    {"held", "hold"}, {"told", "tell"},  {"became", "become"},
        {"began", "begin"}, {"wrote", "write"}, {"grew", "grow"}, {"built", "build"},
        {"brought", "bring"}, {"bought", "buy"}, {"thought", "think"}, {"spent", "spend"},
        {"sold", "sell"},  {"led", "lead"},  {"met", "meet"},   {"kept", "keep"},
        {"lost", "lose"},  {"felt", "feel"}, {"sent", "send"},  {"put", "put"},
        {"set", "set"},    {"sat", "sit"},   {"stood", "stand"}, {"spoke", "speak"},
        {"chose", "choose"}, {"drew", "draw"}, {"fell", "fall"}, {"flew", "fly"},
        {"threw", "throw"}, {"broke", "break"}, {"rose", "rise"}, {"drove", "drive"},
        {"ate", "eat"},    {"ran", "run"},   {"died", "die"},   {"lived", "live"},
        {"plays", "play"}, {"wins", "win"},  {"leaves", "leave"},
    };
    return map;
}

const std::set<std::string>& common_verbs() {
    static const std::set<std::string> set = {
        "go", "say", "make", "take", "give", "see", "know", "get", "come", "find",
        "run", "hold", "tell", "become", "begin", "write", "grow", "build", "bring",
        "buy", "think", "spend", "sell", "lead", "meet", "keep", "lose", "feel",
        "send", "put", "set", "sit", "stand", "speak", "choose", "draw", "fall",
        "fly", "throw", "break", "rise", "drive", "eat", "die", "live", "work",
        "play", "call", "use", "want", "need", "like", "love", "help", "show",
        "move", "turn", "start", "stop", "win", "leave", "include", "contain",
        "describe", "represent", "produce", "create", "cause", "occur", "happen",
        "remain", "appear", "serve", "release", "name", "form", "mean", "refer",
    };
    return set;
}

const std::set<std::string>& month_names() {
    static const std::set<std::string> set = {
        "january", "february", "march", "april", "may", "june", "july",
        "august", "september", "october", "november", "december",
    };
    return set;
}

const std::set<std::string>& person_names() {
    static const std::set<std::string> set = {
        "john", "mary", "james", "robert", "michael", "william", "david",
        "richard", "joseph", "thomas", "charles", "sarah", "anna", "emma",
        "selina", "sharon", "ali", "alice", "bob", "carol", "peter", "paul",
        "george", "henry", "jane", "laura", "martin", "einstein", "newton",
        "darwin", "tesla", "shakespeare", "beyonce", "elizabeth", "victoria",
        "larter", "obama", "lincoln", "washington",
    };
    return set;
}

const std::set<std::string>& place_names() {
    static const std::set<std::string> set = {
        "london", "paris", "berlin", "tokyo", "beijing", "moscow", "rome",
        "madrid", "chicago", "boston", "seattle", "toronto", "sydney",
        "america", "england", "france", "germany", "china", "japan", "russia",
        "italy", "spain", "canada", "australia", "india", "brazil", "egypt",
        "europe", "asia", "africa", "california", "texas", "york",
    };
    return set;
}

const std::set<std::string>& org_keywords() {
    static const std::set<std::string> set = {
        "award", "awards", "university", "college", "institute", "school",
        "company", "corporation", "inc", "corp", "ltd", "association",
        "committee", "council", "ministry", "department", "agency", "bank",
        "church", "league", "club", "party", "union", "academy", "society",
        "organization", "foundation", "press", "times", "journal",
    };
    return set;
}

struct RawTok {
    std::string text;
    int begin = 0;
    int end = 0;
};

std::vector<RawTok> tokenize_offsets(const std::string& s) {
    std::vector<RawTok> out;
    const int n = static_cast<int>(s.size());
    int i = 0;
    auto word_char = [&](int k) {
        unsigned char c = static_cast<unsigned char>(s[static_cast<size_t>(k)]);
        return std::isalnum(c) || c == '\'' || c == '-';
    };
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(s[static_cast<size_t>(i)]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (!word_char(i)) {
            out.push_back({std::string(1, s[static_cast<size_t>(i)]), i, i + 1});
            ++i;
            continue;
        }
        int j = i;
        while (j < n && word_char(j)) ++j;
        int k = j;
        while (k > i && (s[static_cast<size_t>(k - 1)] == '\'' || s[static_cast<size_t>(k - 1)] == '-')) --k;
        if (k > i) out.push_back({s.substr(static_cast<size_t>(i), static_cast<size_t>(k - i)), i, k});
        for (int t = k; t < j; ++t) out.push_back({std::string(1, s[static_cast<size_t>(t)]), t, t + 1});
        i = j;
    }
    return out;
}

std::string guess_pos(const std::string& word, bool sentence_initial) {
    const std::string lower = text::lowercase(word);
    if (text::is_punctuation(word)) return "PUNCT";
    if (is_number_token(word)) return "NUM";
    if (auto it = closed_class().find(lower); it != closed_class().end()) return it->second;
    if (irregular_verbs().count(lower)) return "VERB";
    if (is_capitalized(word) && !sentence_initial) return "PROPN";
    if (common_verbs().count(lower)) return "VERB";
    if (ends_with(lower, "ly")) return "ADV";
    if (ends_with(lower, "ing") || ends_with(lower, "ed")) {
        // deverbal nouns like "building" stay VERB here; acceptable coarse guess
        if (lower.size() > 4) return "VERB";
    }
    if (ends_with(lower, "ous") || ends_with(lower, "ful") || ends_with(lower, "ive") ||
        ends_with(lower, "able") || ends_with(lower, "ible") || ends_with(lower, "ical") ||
        ends_with(lower, "less") || ends_with(lower, "est"))
        return "ADJ";
    if (common_verbs().count(text::stem(lower))) return "VERB";
    if (is_capitalized(word) && sentence_initial &&
        (person_names().count(lower) || place_names().count(lower) || month_names().count(lower)))
        return "PROPN";
    return "NOUN";
}

std::string lemma_of(const std::string& word, const std::string& pos) {
    const std::string lower = text::lowercase(word);
    if (auto it = irregular_verbs().find(lower); it != irregular_verbs().end()) return it->second;
    static const std::unordered_map<std::string, std::string> aux = {
        {"am", "be"}, {"is", "be"}, {"are", "be"}, {"was", "be"}, {"were", "be"},
        {"been", "be"}, {"being", "be"}, {"has", "have"}, {"had", "have"},
        {"does", "do"}, {"did", "do"},
    };
    if (auto it = aux.find(lower); it != aux.end()) return it->second;
    if (pos == "VERB" || pos == "NOUN") {
        if (lower.size() > 4 && ends_with(lower, "ies")) return lower.substr(0, lower.size() - 3) + "y";
        if (lower.size() > 4 && ends_with(lower, "sses")) return lower.substr(0, lower.size() - 2);
        if (lower.size() > 3 && ends_with(lower, "s") && !ends_with(lower, "ss") &&
            !ends_with(lower, "us") && !ends_with(lower, "is"))
            return lower.substr(0, lower.size() - 1);
    }
    if (pos == "VERB") {
        if (lower.size() > 5 && ends_with(lower, "ing")) {
            std::string base = lower.substr(0, lower.size() - 3);
            if (base.size() >= 2 && base[base.size() - 1] == base[base.size() - 2]) base.pop_back();
            return base;
        }
        if (lower.size() > 4 && ends_with(lower, "ed")) {
            std::string base = lower.substr(0, lower.size() - 2);
            if (base.size() >= 2 && base[base.size() - 1] == base[base.size() - 2]) base.pop_back();
            else if (!base.empty() && base.back() == 'i') base.back() = 'y';
            return base;
        }
    }
    return lower;
}

struct NpSpan {
    int start = 0;
    int end = 0; // exclusive
    int head = 0;
};

bool np_member_pos(const std::string& pos) {
    return pos == "DET" || pos == "ADJ" || pos == "NUM" || pos == "NOUN" || pos == "PROPN";
}

std::vector<NpSpan> find_noun_phrases(const std::vector<Token>& toks) {
    std::vector<NpSpan> spans;
    const int n = static_cast<int>(toks.size());
    int i = 0;
    while (i < n) {
        if (!np_member_pos(toks[static_cast<size_t>(i)].pos) && toks[static_cast<size_t>(i)].pos != "PRON") {
            ++i;
            continue;
        }
        if (toks[static_cast<size_t>(i)].pos == "PRON") {
            spans.push_back({i, i + 1, i});
            ++i;
            continue;
        }
        int j = i;
        while (j < n && np_member_pos(toks[static_cast<size_t>(j)].pos)) ++j;
        int head = j - 1;
        for (int k = j - 1; k >= i; --k) {
            const std::string& p = toks[static_cast<size_t>(k)].pos;
            if (p == "NOUN" || p == "PROPN" || p == "NUM") {
                head = k;
                break;
            }
        }
        spans.push_back({i, j, head});
        i = j;
    }
    return spans;
}

struct NerSpan {
    int start = 0;
    int end = 0;
    std::string tag;
};

std::vector<NerSpan> find_entities(const std::vector<Token>& toks) {
    std::vector<NerSpan> out;
    const int n = static_cast<int>(toks.size());
    int i = 0;
    auto lower_of = [&](int k) { return text::lowercase(toks[static_cast<size_t>(k)].text); };
    while (i < n) {
        const Token& t = toks[static_cast<size_t>(i)];
        const std::string low = lower_of(i);
        if (month_names().count(low)) {
            int j = i + 1;
            while (j < n && toks[static_cast<size_t>(j)].pos == "NUM") ++j;
            out.push_back({i, j, "DATE"});
            i = j;
            continue;
        }
        if (t.pos == "NUM") {
            bool year = t.text.size() == 4 && is_number_token(t.text) &&
                        t.text >= "1000" && t.text <= "2199";
            out.push_back({i, i + 1, year ? "DATE" : "CARDINAL"});
            ++i;
            continue;
        }
        if (t.pos == "PROPN" || (i == 0 && is_capitalized(t.text) &&
                                 (person_names().count(low) || place_names().count(low)))) {
            int j = i + 1;
            while (j < n) {
                const Token& u = toks[static_cast<size_t>(j)];
                if (u.pos == "PROPN" || (u.pos == "NUM" && j > i)) {
                    ++j;
                    continue;
                }
                // bridge "of"/"for" between two proper-noun runs
                const std::string ul = lower_of(j);
                if ((ul == "of" || ul == "for") && j + 1 < n &&
                    (toks[static_cast<size_t>(j + 1)].pos == "PROPN" ||
                     toks[static_cast<size_t>(j + 1)].pos == "NUM")) {
                    ++j;
                    continue;
                }
                break;
            }
            while (j > i && toks[static_cast<size_t>(j - 1)].pos == "ADP") --j;
            std::string tag = "MISC";
            bool has_org = false, has_person = false, has_place = false;
            for (int k = i; k < j; ++k) {
                const std::string kl = lower_of(k);
                if (org_keywords().count(kl)) has_org = true;
                if (person_names().count(kl)) has_person = true;
                if (place_names().count(kl)) has_place = true;
            }
            if (has_org) tag = "ORG";
            else if (has_person) tag = "PERSON";
            else if (has_place) tag = "GPE";
            out.push_back({i, j, tag});
            i = j;
            continue;
        }
        ++i;
    }
    return out;
}

} // namespace

int AnnotatedSentence::root_index() const {
    for (const Token& t : tokens)
        if (t.head_index == t.index) return t.index;
    return 0;
}

bool is_content_word(const Token& token) {
    static const std::set<std::string> closed = {
        "DET", "ADP", "CCONJ", "SCONJ", "PRON", "AUX", "PART", "PUNCT", "SYM",
    };
    if (closed.count(token.pos)) return false;
    return !text::is_stopword(text::lowercase(token.text));
}

AnnotatedSentence Annotator::annotate_uncached(const std::string& raw_text) const {
    std::string trimmed = raw_text;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
    size_t lead = 0;
    while (lead < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[lead]))) ++lead;
    if (lead == trimmed.size()) throw InvalidInput("annotate: empty input");

    AnnotatedSentence s;
    s.raw_text = raw_text;

    std::vector<RawTok> raw = tokenize_offsets(raw_text);
    if (raw.empty()) throw InvalidInput("annotate: no tokens");

    for (size_t i = 0; i < raw.size(); ++i) {
        Token t;
        t.index = static_cast<int>(i);
        t.text = raw[i].text;
        t.begin_char = raw[i].begin;
        t.end_char = raw[i].end;
        t.pos = guess_pos(t.text, i == 0);
        t.lemma = lemma_of(t.text, t.pos);
        s.tokens.push_back(std::move(t));
    }

    for (const NerSpan& e : find_entities(s.tokens))
        for (int k = e.start; k < e.end; ++k) s.tokens[static_cast<size_t>(k)].ner = e.tag;

    for (Token& t : s.tokens) t.is_content = is_content_word(t);

    // --- dependency heads -------------------------------------------------
    const int n = static_cast<int>(s.tokens.size());
    std::vector<NpSpan> nps = find_noun_phrases(s.tokens);
    std::vector<int> np_of(static_cast<size_t>(n), -1);
    for (size_t k = 0; k < nps.size(); ++k)
        for (int i = nps[k].start; i < nps[k].end; ++i) np_of[static_cast<size_t>(i)] = static_cast<int>(k);

    int root = -1;
    for (int i = 0; i < n && root < 0; ++i)
        if (s.tokens[static_cast<size_t>(i)].pos == "VERB") root = i;
    for (int i = 0; i < n && root < 0; ++i)
        if (s.tokens[static_cast<size_t>(i)].pos == "AUX") root = i;
    if (root < 0 && !nps.empty()) root = nps.front().head;
    if (root < 0) root = 0;

    auto nearest_verb_left = [&](int i) {
        for (int k = i - 1; k >= 0; --k) {
            const std::string& p = s.tokens[static_cast<size_t>(k)].pos;
            if (p == "VERB" || p == "AUX") return k;
        }
        return -1;
    };

    std::vector<int> head(static_cast<size_t>(n), root);
    for (int i = 0; i < n; ++i) {
        if (i == root) {
            head[static_cast<size_t>(i)] = i;
            continue;
        }
        const std::string& pos = s.tokens[static_cast<size_t>(i)].pos;
        const int np = np_of[static_cast<size_t>(i)];
        if (np >= 0 && nps[static_cast<size_t>(np)].head != i) {
            head[static_cast<size_t>(i)] = nps[static_cast<size_t>(np)].head;
            continue;
        }
        if (np >= 0) { // NP head token
            int before = nps[static_cast<size_t>(np)].start - 1;
            if (before >= 0 && s.tokens[static_cast<size_t>(before)].pos == "ADP" && before != i) {
                head[static_cast<size_t>(i)] = before;
            } else {
                int v = nearest_verb_left(i);
                head[static_cast<size_t>(i)] = v >= 0 ? v : root;
            }
            continue;
        }
        if (pos == "ADP") {
            // attach to the head of the NP (or token) immediately to the left
            int prev = i - 1;
            while (prev >= 0 && s.tokens[static_cast<size_t>(prev)].pos == "PUNCT") --prev;
            if (prev >= 0 && np_of[static_cast<size_t>(prev)] >= 0) {
                head[static_cast<size_t>(i)] = nps[static_cast<size_t>(np_of[static_cast<size_t>(prev)])].head;
            } else {
                int v = nearest_verb_left(i);
                head[static_cast<size_t>(i)] = v >= 0 ? v : root;
            }
            continue;
        }
        if (pos == "VERB" || pos == "AUX") {
            head[static_cast<size_t>(i)] = root;
            continue;
        }
        if (pos == "PUNCT") {
            head[static_cast<size_t>(i)] = root;
            continue;
        }
        int v = nearest_verb_left(i);
        head[static_cast<size_t>(i)] = v >= 0 ? v : root;
    }

    // guard against accidental cycles or stray self-loops
    for (int i = 0; i < n; ++i) {
        if (i == root) continue;
        if (head[static_cast<size_t>(i)] == i) head[static_cast<size_t>(i)] = root;
        int slow = i, steps = 0;
        while (slow != root && steps <= n) {
            slow = head[static_cast<size_t>(slow)];
            ++steps;
        }
        if (steps > n) head[static_cast<size_t>(i)] = root;
    }
    for (int i = 0; i < n; ++i) s.tokens[static_cast<size_t>(i)].head_index = head[static_cast<size_t>(i)];

    s.chunks = candidate_chunks(s);
    return s;
}

std::vector<Chunk> candidate_chunks(const AnnotatedSentence& sentence, int max_subtree_len) {
    const int n = static_cast<int>(sentence.tokens.size());
    std::set<std::pair<int, int>> spans;

    auto add_span = [&](int start, int end) {
        // trim boundary punctuation
        while (start < end && sentence.tokens[static_cast<size_t>(start)].pos == "PUNCT") ++start;
        while (end > start && sentence.tokens[static_cast<size_t>(end - 1)].pos == "PUNCT") --end;
        if (start < end) spans.insert({start, end});
    };

    for (const NpSpan& np : find_noun_phrases(sentence.tokens)) add_span(np.start, np.end);
    for (const NerSpan& e : find_entities(sentence.tokens)) add_span(e.start, e.end);

    // contiguous dependency subtrees; the root subtree spans the whole
    // sentence and carries no selective information, so it is excluded
    int first_word = 0, last_word = n - 1;
    while (first_word < n && sentence.tokens[static_cast<size_t>(first_word)].pos == "PUNCT") ++first_word;
    while (last_word >= 0 && sentence.tokens[static_cast<size_t>(last_word)].pos == "PUNCT") --last_word;
    std::vector<std::vector<int>> children(static_cast<size_t>(n));
    for (const Token& t : sentence.tokens)
        if (t.head_index != t.index) children[static_cast<size_t>(t.head_index)].push_back(t.index);
    for (int i = 0; i < n; ++i) {
        int lo = i, hi = i, count = 0;
        std::deque<int> queue{i};
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            ++count;
            lo = std::min(lo, u);
            hi = std::max(hi, u);
            for (int c : children[static_cast<size_t>(u)]) queue.push_back(c);
        }
        if (count == hi - lo + 1 && count <= max_subtree_len &&
            !(lo <= first_word && hi >= last_word))
            add_span(lo, hi + 1);
    }

    if (spans.empty())
        for (int i = 0; i < n; ++i)
            if (sentence.tokens[static_cast<size_t>(i)].is_content) spans.insert({i, i + 1});
    if (spans.empty())
        for (int i = 0; i < n; ++i)
            if (sentence.tokens[static_cast<size_t>(i)].pos != "PUNCT") spans.insert({i, i + 1});
    if (spans.empty() && n > 0) spans.insert({0, 1});

    // head token of a span: the token whose dependency head lies outside it
    auto head_of = [&](int start, int end) {
        for (int k = start; k < end; ++k) {
            int h = sentence.tokens[static_cast<size_t>(k)].head_index;
            if (h < start || h >= end || h == k) return k;
        }
        return end - 1;
    };

    std::vector<Chunk> out;
    for (auto [start, end] : spans) {
        Chunk c;
        c.start = start;
        c.end = end;
        int b = sentence.tokens[static_cast<size_t>(start)].begin_char;
        int e = sentence.tokens[static_cast<size_t>(end - 1)].end_char;
        c.text = sentence.raw_text.substr(static_cast<size_t>(b), static_cast<size_t>(e - b));
        int h = head_of(start, end);
        c.pos = sentence.tokens[static_cast<size_t>(h)].pos;
        c.ner = sentence.tokens[static_cast<size_t>(h)].ner;
        out.push_back(std::move(c));
    }
    return out; // std::set iteration already sorts by (start, end)
}

int dependency_distance(const AnnotatedSentence& sentence, int i, int j) {
    const int n = static_cast<int>(sentence.tokens.size());
    if (i < 0 || j < 0 || i >= n || j >= n) throw InvalidInput("dependency_distance: index out of range");
    if (i == j) return 0;
    // depth-from-root trick is unreliable with our head guard, so BFS
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (const Token& t : sentence.tokens) {
        if (t.head_index != t.index) {
            adj[static_cast<size_t>(t.index)].push_back(t.head_index);
            adj[static_cast<size_t>(t.head_index)].push_back(t.index);
        }
    }
    std::vector<int> dist(static_cast<size_t>(n), -1);
    std::deque<int> queue{i};
    dist[static_cast<size_t>(i)] = 0;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        if (u == j) return dist[static_cast<size_t>(u)];
        for (int v : adj[static_cast<size_t>(u)]) {
            if (dist[static_cast<size_t>(v)] < 0) {
                dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
                queue.push_back(v);
            }
        }
    }
    return n; // disconnected should not happen for a valid tree
}

// --- serialization & cache ------------------------------------------------

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sentence_to_json(const AnnotatedSentence& s) {
    json j;
    j["raw_text"] = s.raw_text;
    j["paragraph_id"] = s.paragraph_id;
    j["tokens"] = json::array();
    for (const Token& t : s.tokens)
        j["tokens"].push_back({{"i", t.index}, {"text", t.text}, {"lemma", t.lemma},
                               {"pos", t.pos}, {"ner", t.ner}, {"content", t.is_content},
                               {"head", t.head_index}, {"b", t.begin_char}, {"e", t.end_char}});
    j["chunks"] = json::array();
    for (const Chunk& c : s.chunks)
        j["chunks"].push_back({{"start", c.start}, {"end", c.end}, {"text", c.text},
                               {"pos", c.pos}, {"ner", c.ner}});
    return j.dump();
}

AnnotatedSentence sentence_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    AnnotatedSentence s;
    s.raw_text = j.at("raw_text").get<std::string>();
    s.paragraph_id = j.value("paragraph_id", "");
    for (const json& tj : j.at("tokens")) {
        Token t;
        t.index = tj.at("i").get<int>();
        t.text = tj.at("text").get<std::string>();
        t.lemma = tj.at("lemma").get<std::string>();
        t.pos = tj.at("pos").get<std::string>();
        t.ner = tj.at("ner").get<std::string>();
        t.is_content = tj.at("content").get<bool>();
        t.head_index = tj.at("head").get<int>();
        t.begin_char = tj.at("b").get<int>();
        t.end_char = tj.at("e").get<int>();
        s.tokens.push_back(std::move(t));
    }
    for (const json& cj : j.at("chunks")) {
        Chunk c;
        c.start = cj.at("start").get<int>();
        c.end = cj.at("end").get<int>();
        c.text = cj.at("text").get<std::string>();
        c.pos = cj.at("pos").get<std::string>();
        c.ner = cj.at("ner").get<std::string>();
        s.chunks.push_back(std::move(c));
    }
    return s;
}

Annotator::Annotator(std::string cache_path) : cache_path_(std::move(cache_path)) {
    if (cache_path_.empty()) return;
    std::ifstream in(cache_path_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            cache_[j.at("key").get<std::string>()] =
                sentence_from_json(j.at("sentence").dump());
        } catch (const json::exception&) {
            continue; // skip corrupt cache lines
        }
    }
}

Annotator::~Annotator() = default;

AnnotatedSentence Annotator::annotate(const std::string& raw_text) const {
    const std::string key = sha256_hex(raw_text);
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    AnnotatedSentence s = annotate_uncached(raw_text);
    if (!cache_path_.empty()) {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (!cache_.count(key)) {
            cache_[key] = s;
            std::ofstream out(cache_path_, std::ios::app);
            json j;
            j["key"] = key;
            j["sentence"] = json::parse(sentence_to_json(s));
            out << j.dump() << "\n";
        }
    }
    return s;
}

} // namespace acsqg
