// Generated by tests/oracles/bleu_reference.py -- do not edit by hand.
#pragma once
#include <string>
#include <vector>

struct BleuOracleCase {
  std::string candidate;
  std::vector<std::string> references;
  double expected;
};

inline const std::vector<BleuOracleCase>& bleu_oracle_cases() {
  static const std::vector<BleuOracleCase> cases = {
      {"the cat sat", {"the cat sat down"}, 71.6531310574},
      {"the cat sat on the mat", {"the cat sat on the mat"}, 100.0000000000},
      {"dog dog dog", {"the quick brown fox"}, 0.0000000000},
      {"a", {"a"}, 100.0000000000},
      {"the the the the", {"the cat"}, 31.9471552123},
      {"the cat", {"the cat sat", "a cat sat down"}, 60.6530659713},
      {"cat happy house yesterday slept lost red happy happy dog", {"cat happy yesterday slept lost happy red a happy child cat happy", "cat happy sat yesterday slept saw quickly red small"}, 25.4066374077},
      {"small saw slept red over found lost", {"small saw slept red over found lost"}, 100.0000000000},
      {"dog today river the young big found", {"dog today old the found big found child ran"}, 22.4296876645},
      {"child cat woman slowly bird a cat cat quickly on old", {"child cat slowly blue a slowly jumped cat quickly on under"}, 22.0335967900},
      {"man happy slept river carried mat river", {"man jumped slept man river carried mat", "mat tree slept river carried"}, 41.1133616901},
      {"saw cat lost", {"saw cat lost"}, 100.0000000000},
      {"under woman on small ran river old dog", {"under woman man small ran river old the", "under woman house ran old carried"}, 41.1133616901},
      {"over man old slowly quickly woman found jumped", {"dog over on jumped slowly over man happy cat woman found small jumped", "dog over slowly man happy cat woman found a small jumped"}, 18.3685786203},
      {"mat quickly old tree slowly", {"mat quickly blue tree slowly", "on old blue tree slowly"}, 45.1801001805},
      {"big a sat dog house today small lost young old carried the", {"over a sat sat house today small dog young old big"}, 22.8524171121},
      {"man house happy woman mat", {"sat happy today man man jumped woman mat"}, 19.7190277542},
      {"found a under over big woman under dog man", {"found bird man big woman under today dog"}, 24.1497793679},
      {"child man over ran saw dog red carried saw", {"child man jumped ran saw dog red carried saw"}, 66.0632863603},
      {"quickly today over mat young old jumped", {"big saw today over man young cat old jumped"}, 22.4296876645},
      {"man mat bird a child ran dog slowly man ran under found big", {"man mat bird a child ran dog slowly man ran under found big"}, 100.0000000000},
      {"quickly slowly found cat the sat tree", {"quickly slowly found slowly cat under sat tree"}, 31.3674152064},
      {"found dog small on found mat river slept dog old blue", {"dog found today over on found ran small young slept the young blue"}, 13.5957471245},
      {"dog cat big ran under", {"tree yesterday cat under", "tree the happy under"}, 28.5744042970},
      {"tree red cat slept the woman saw the", {"tree red cat today slept the a found young the"}, 23.9398747471},
      {"the small child", {"the mat small small child", "man mat small man child"}, 36.3040726445},
      {"sat house river blue a tree sat over house river red carried", {"sat house river big carried child tree sat over house river blue big woman", "sat house young big carried child tree sat red house river mat blue"}, 46.4223759428},
      {"red dog found red ran cat jumped a happy the over", {"red dog lost house red cat river a happy over"}, 19.3920271386},
      {"old today under jumped found a small man carried mat", {"old today red jumped jumped over small man young mat"}, 20.7444325763},
      {"quickly old under carried blue carried lost cat on young jumped", {"quickly old sat under blue mat a big cat house young jumped slept"}, 16.1681592142},
      {"slowly cat old small over bird old woman", {"slowly saw dog cat old small jumped saw old woman"}, 23.9398747471},
      {"on blue lost quickly big", {"the blue lost quickly", "the blue lost quickly"}, 42.7287006396},
      {"the found quickly over carried tree red man quickly", {"the cat found found red over carried tree red man blue lost quickly"}, 32.1854874365},
      {"the found house happy", {"house carried house happy"}, 40.8248290464},
      {"man old old jumped bird man old", {"man old old today bird man old sat"}, 40.0839872883},
      {"lost", {"lost jumped lost"}, 13.5335283237},
      {"bird quickly blue small red mat red quickly found over under carried young", {"bird blue small red mat red quickly found over under young", "bird blue red over red quickly bird house young ran"}, 68.1245536420},
      {"big house blue child child carried", {"big blue child child carried"}, 53.7284965912},
      {"child a on", {"tree child a", "found a"}, 63.8943104246},
      {"house quickly tree ran man mat lost old", {"house quickly over man happy old lost old", "slept quickly over man carried quickly old lost"}, 25.5352827221},
      {"happy river quickly", {"happy river quickly"}, 100.0000000000},
      {"cat happy slowly found", {"woman happy slowly carried found"}, 35.1862973998},
      {"dog today ran", {"dog today ran slept"}, 71.6531310574},
      {"slowly dog house carried found man child", {"slowly dog house carried woman woman found man child", "dog bird woman lost"}, 44.6831071844},
      {"young saw yesterday slept happy young", {"young saw found red river slept happy young"}, 30.1264305239},
      {"bird ran jumped saw a slept young carried", {"bird ran a on quickly dog a slept young dog"}, 22.8731807734},
      {"tree mat saw bird", {"yesterday slept bird", "yesterday slept bird"}, 31.9471552123},
      {"house over", {"big slept the yesterday house"}, 15.7776849328},
      {"carried a bird young yesterday ran jumped dog", {"carried a young yesterday ran jumped dog"}, 59.4603557501},
      {"jumped quickly jumped saw man under old", {"ran jumped on slept blue slept under old"}, 19.1489783687},
  };
  return cases;
}
