#pragma once

#include <array>
#include <string_view>
#include <utility>

// Built-in copies of the files under resources/. Tests check they agree.
namespace polsent::resources {

inline constexpr std::array<std::string_view, 130> kStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
    "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers",
    "herself", "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what",
    "which", "who", "whom", "this", "that", "these", "those", "am", "is", "are",
    "was", "were", "be", "been", "being", "have", "has", "had", "having", "do",
    "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about",
    "against", "between", "into", "through", "during", "before", "after", "above", "below", "to",
    "from", "up", "down", "in", "out", "on", "off", "over", "under", "again",
    "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
    "any", "both", "each", "few", "more", "most", "other", "some", "such", "only",
    "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "should", "now", "d", "ll", "m", "o", "re", "ve", "y",
};

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 120>
    kContractions = {{
    {"ain't", "am not"}, {"aren't", "are not"}, {"can't", "can not"},
    {"can't've", "cannot have"}, {"could've", "could have"}, {"couldn't", "could not"},
    {"couldn't've", "could not have"}, {"didn't", "did not"}, {"doesn't", "does not"},
    {"don't", "do not"}, {"hadn't", "had not"}, {"hadn't've", "had not have"},
    {"hasn't", "has not"}, {"haven't", "have not"}, {"he'd", "he would"},
    {"he'd've", "he would have"}, {"he'll", "he will"}, {"he's", "he is"},
    {"how'd", "how did"}, {"how'll", "how will"}, {"how's", "how is"},
    {"i'd", "i would"}, {"i'd've", "i would have"}, {"i'll", "i will"},
    {"i'll've", "i will have"}, {"i'm", "i am"}, {"i've", "i have"},
    {"isn't", "is not"}, {"it'd", "it would"}, {"it'd've", "it would have"},
    {"it'll", "it will"}, {"it's", "it is"}, {"let's", "let us"},
    {"ma'am", "madam"}, {"mayn't", "may not"}, {"might've", "might have"},
    {"mightn't", "might not"}, {"must've", "must have"}, {"mustn't", "must not"},
    {"needn't", "need not"}, {"o'clock", "of the clock"}, {"oughtn't", "ought not"},
    {"shan't", "shall not"}, {"she'd", "she would"}, {"she'd've", "she would have"},
    {"she'll", "she will"}, {"she's", "she is"}, {"should've", "should have"},
    {"shouldn't", "should not"}, {"shouldn't've", "should not have"}, {"so've", "so have"},
    {"that'd", "that would"}, {"that's", "that is"}, {"there'd", "there would"},
    {"there's", "there is"}, {"there'll", "there will"}, {"they'd", "they would"},
    {"they'd've", "they would have"}, {"they'll", "they will"}, {"they're", "they are"},
    {"they've", "they have"}, {"to've", "to have"}, {"wasn't", "was not"},
    {"we'd", "we would"}, {"we'll", "we will"}, {"we're", "we are"},
    {"we've", "we have"}, {"weren't", "were not"}, {"what'll", "what will"},
    {"what're", "what are"}, {"what's", "what is"}, {"what've", "what have"},
    {"when's", "when is"}, {"when've", "when have"}, {"where'd", "where did"},
    {"where's", "where is"}, {"where've", "where have"}, {"who'll", "who will"},
    {"who's", "who is"}, {"who've", "who have"}, {"why's", "why is"},
    {"why've", "why have"}, {"will've", "will have"}, {"won't", "will not"},
    {"won't've", "will not have"}, {"would've", "would have"}, {"wouldn't", "would not"},
    {"y'all", "you all"}, {"y'all'd", "you all would"}, {"y'all're", "you all are"},
    {"y'all've", "you all have"}, {"you'd", "you would"}, {"you'd've", "you would have"},
    {"you'll", "you will"}, {"you're", "you are"}, {"you've", "you have"},
    {"ain't've", "am not have"}, {"here's", "here is"}, {"how're", "how are"},
    {"i'ma", "i am going to"}, {"it'sn't", "it is not"}, {"nothin'", "nothing"},
    {"somethin'", "something"}, {"tryin'", "trying"}, {"goin'", "going"},
    {"doin'", "doing"}, {"sayin'", "saying"}, {"talkin'", "talking"},
    {"comin'", "coming"}, {"runnin'", "running"}, {"votin'", "voting"},
    {"'em", "them"}, {"'cause", "because"}, {"e'er", "ever"},
    {"ne'er", "never"}, {"o'er", "over"}, {"'tis", "it is"},
    {"'twas", "it was"}, {"daren't", "dare not"}, {"everyone's", "everyone is"},
}};

}  // namespace polsent::resources
