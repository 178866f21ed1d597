# Markov dynamics and the two pictures
