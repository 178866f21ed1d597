# Core probability spaces, observables and composites
