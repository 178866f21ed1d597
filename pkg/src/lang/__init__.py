# Query language: lexer, parser and evaluator
