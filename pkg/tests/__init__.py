# Tests 
