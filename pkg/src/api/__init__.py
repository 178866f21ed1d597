# API-shaped in-process functions
