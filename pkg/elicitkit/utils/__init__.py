# Utils 
